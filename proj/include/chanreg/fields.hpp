#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "chanreg/spectral.hpp"

namespace chanreg {

// Scalar function on the channel box. Physical values are canonical; the mixed
// spectral representation is computed on demand and cached until mutation.
class ScalarField
{
public:
  explicit ScalarField(GridPtr grid);
  ScalarField(GridPtr grid, Array values);

  static ScalarField from_mixed(GridPtr grid, CArray mixed);

  template <typename F> static ScalarField sample(GridPtr grid, F &&f)
  {
    Array v(grid->size());
    for (Index k = 0; k < grid->nz(); ++k) {
      for (Index j = 0; j < grid->ny(); ++j) {
        for (Index i = 0; i < grid->nx(); ++i) {
          v(grid->index(i, j, k)) = f(grid->x1(i), grid->x2(j), grid->x3(k));
        }
      }
    }
    return ScalarField(std::move(grid), std::move(v));
  }

  Grid const &grid() const { return *grid_; }
  GridPtr const &grid_ptr() const { return grid_; }
  Array const &values() const { return values_; }
  Array &mutable_values();
  CArray const &mixed() const;

  // False when the field (or the input it was derived from) carries more than
  // the tolerated energy in the top third of its spectrum.
  bool resolved() const { return resolved_; }
  void set_resolved(bool r) { resolved_ = r; }

  ScalarField &operator+=(ScalarField const &o);
  ScalarField &operator-=(ScalarField const &o);
  ScalarField &operator*=(Real s);

private:
  GridPtr grid_;
  Array values_;
  mutable std::optional<CArray> mixed_;
  bool resolved_ = true;
};

ScalarField operator+(ScalarField a, ScalarField const &b);
ScalarField operator-(ScalarField a, ScalarField const &b);
ScalarField operator*(Real s, ScalarField a);
ScalarField operator-(ScalarField a);
// Pointwise product.
ScalarField product(ScalarField const &a, ScalarField const &b);

// Function of (x1, x2) on the horizontal grid, used for barotropic modes and the
// two-dimensional inequalities.
class PlaneField
{
public:
  explicit PlaneField(GridPtr grid);
  PlaneField(GridPtr grid, Array values);

  template <typename F> static PlaneField sample(GridPtr grid, F &&f)
  {
    Array v(grid->plane_size());
    for (Index j = 0; j < grid->ny(); ++j) {
      for (Index i = 0; i < grid->nx(); ++i) { v(i + grid->nx() * j) = f(grid->x1(i), grid->x2(j)); }
    }
    return PlaneField(std::move(grid), std::move(v));
  }

  Grid const &grid() const { return *grid_; }
  GridPtr const &grid_ptr() const { return grid_; }
  Array const &values() const { return values_; }
  Array &mutable_values() { return values_; }
  CArray mixed() const;

  // Constant-in-x3 extension to the volume.
  ScalarField extend() const;

private:
  GridPtr grid_;
  Array values_;
};

struct VectorField
{
  explicit VectorField(GridPtr grid);
  VectorField(ScalarField u1, ScalarField u2, ScalarField u3);

  ScalarField &operator[](int c) { return comp[static_cast<size_t>(c)]; }
  ScalarField const &operator[](int c) const { return comp[static_cast<size_t>(c)]; }
  Grid const &grid() const { return comp[0].grid(); }
  GridPtr const &grid_ptr() const { return comp[0].grid_ptr(); }

  std::array<ScalarField, 3> comp;
  bool divergence_free = false;
  bool no_slip = false;
};

VectorField operator+(VectorField const &a, VectorField const &b);
VectorField operator-(VectorField const &a, VectorField const &b);
VectorField operator*(Real s, VectorField const &a);

// Spectral derivative along axis 1, 2 or 3. Marks the result unresolved when the
// input's top-third spectral energy fraction exceeds resolution_threshold.
inline constexpr Real resolution_threshold = 1e-4;
ScalarField diff(ScalarField const &f, int axis);
VectorField diff(VectorField const &u, int axis);

VectorField grad(ScalarField const &f);
std::array<ScalarField, 2> grad_h(ScalarField const &f);
ScalarField divergence(VectorField const &u);
ScalarField laplacian(ScalarField const &f);
ScalarField laplacian_h(ScalarField const &f);
VectorField laplacian(VectorField const &u);
VectorField laplacian_h(VectorField const &u);

// L^q norms by quadrature; q = infinity gives the grid maximum (a lower bound on the sup).
Real norm_lq(ScalarField const &f, Real q);
Real norm_lq(PlaneField const &f, Real q);
Real norm_lq(VectorField const &u, Real q);

Real inner_l2(ScalarField const &a, ScalarField const &b);
Real inner_l2(PlaneField const &a, PlaneField const &b);
Real inner_l2(VectorField const &a, VectorField const &b);

// (sum over |alpha| <= m of ||d^alpha f||_2^2)^(1/2), m in {0, 1, 2}.
Real sobolev_norm(ScalarField const &f, int m);
Real sobolev_norm(PlaneField const &f, int m);
Real sobolev_norm(VectorField const &u, int m);

// Frequently used derivative norms of a vector field.
Real grad_norm(VectorField const &u);        // ||grad u||_2
Real grad_h_norm(VectorField const &u);      // ||grad_h u||_2
Real grad_h_grad_norm(VectorField const &u); // ||grad_h grad u||_2

Real max_divergence(VectorField const &u);
Real max_wall_value(VectorField const &u);
Real max_wall_value(ScalarField const &f);

struct FieldFlags
{
  bool divergence_free = false;
  bool no_slip = false;
};

// Random smooth fields with Gaussian coefficients of amplitude
// (1 + mx^2 + my^2 + m^2)^(-decay/2) over horizontal modes |mx|, |my| <= horizontal_cap
// and Legendre degrees m <= vertical_cap. Coefficients are drawn per mode from a
// hash of the seed, so a given spec describes the same continuous field on every
// grid that resolves it.
struct RandomSpec
{
  std::uint64_t seed = 0;
  Real decay = 2.0;
  int horizontal_cap = 4;
  int vertical_cap = 12;
  FieldFlags flags;
};

ScalarField random_scalar_field(GridPtr const &grid, RandomSpec const &spec);
PlaneField random_plane_field(GridPtr const &grid, RandomSpec const &spec);
VectorField random_vector_field(GridPtr const &grid, RandomSpec const &spec);

// Deterministic 64-bit mixing used for per-mode and per-sample seeds.
std::uint64_t splitmix64(std::uint64_t x);

} // namespace chanreg
