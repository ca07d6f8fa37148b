#pragma once

#include <memory>

#include "chanreg/core.hpp"

namespace chanreg {

// Discretization of the channel surrogate: periodic box [0,px) x [0,py) horizontally,
// Legendre–Gauss–Lobatto collocation on [-L, L] vertically. Immutable and shared.
//
// Physical data are stored x1-fastest: index(i, j, k) = i + nx * (j + ny * k).
// "Mixed" spectral data use the same layout with (i, j) the FFT indices and k the
// vertical node; viewed as an (nx*ny) x nz column-major matrix, each row is one
// horizontal mode's vertical profile.
class Grid
{
public:
  Grid(Index nx, Index ny, Index nz, Real px, Real py, Real L);

  Index nx() const { return nx_; }
  Index ny() const { return ny_; }
  Index nz() const { return nz_; }
  Real px() const { return px_; }
  Real py() const { return py_; }
  Real half_height() const { return L_; }
  Index plane_size() const { return nx_ * ny_; }
  Index size() const { return nx_ * ny_ * nz_; }
  Index index(Index i, Index j, Index k) const { return i + nx_ * (j + ny_ * k); }

  Real x1(Index i) const { return px_ * static_cast<Real>(i) / static_cast<Real>(nx_); }
  Real x2(Index j) const { return py_ * static_cast<Real>(j) / static_cast<Real>(ny_); }
  Real x3(Index k) const { return z_(k); }
  Vector const &z() const { return z_; }

  Real cell_area() const { return px_ * py_ / static_cast<Real>(nx_ * ny_); }
  Real area() const { return px_ * py_; }
  Real volume() const { return px_ * py_ * 2 * L_; }

  Vector const &vertical_weights() const { return wz_; }
  Matrix const &dz() const { return dz_; }
  Matrix const &dzz() const { return dzz_; }
  Matrix const &to_legendre() const { return to_leg_; }
  Matrix const &from_legendre() const { return from_leg_; }

  // Signed mode numbers and effective wavenumbers (zero at Nyquist).
  int mode_x(Index i) const { return i <= nx_ / 2 ? static_cast<int>(i) : static_cast<int>(i - nx_); }
  int mode_y(Index j) const { return j <= ny_ / 2 ? static_cast<int>(j) : static_cast<int>(j - ny_); }
  Real kx(Index i) const;
  Real ky(Index j) const;

  // 2/3-rule retained band: |m| <= (n - 1) / 3. Triple products of band-limited
  // fields are then summed exactly by the horizontal trapezoid rule.
  int band_x() const { return static_cast<int>((nx_ - 1) / 3); }
  int band_y() const { return static_cast<int>((ny_ - 1) / 3); }
  bool in_band(Index i, Index j) const;

  bool same_shape(Grid const &other) const;

private:
  Index nx_, ny_, nz_;
  Real px_, py_, L_;
  Vector z_, wz_;
  Matrix dz_, dzz_, to_leg_, from_leg_;
};

using GridPtr = std::shared_ptr<Grid const>;

// Validated construction; rejects odd or tiny horizontal counts, nz < 5, nonpositive lengths.
GridPtr make_grid(Index nx, Index ny, Index nz, Real px, Real py, Real L);

// Horizontal transforms between physical values and mixed (Fourier x nodal) data.
// Forward is normalized by 1/(nx*ny) so the zero mode is the horizontal mean.
CArray horizontal_forward(Grid const &grid, Array const &values);
Array horizontal_inverse(Grid const &grid, CArray const &mixed);

// The same for a single horizontal plane of nx*ny values.
CArray plane_forward(Grid const &grid, Array const &values);
Array plane_inverse(Grid const &grid, CArray const &mixed);

// Full spectral coefficients: Fourier horizontally, Legendre vertically.
CArray to_spectral(Grid const &grid, Array const &values);
Array from_spectral(Grid const &grid, CArray const &coefficients);

// m * op for complex m and real op, computed on the interleaved real view of m.
CMatrix mul_real(CMatrix const &m, Matrix const &op);

// Vertical linear operator applied to every horizontal mode: out.row(m) = op * in.row(m)^T.
CArray apply_vertical(Grid const &grid, Matrix const &op, CArray const &mixed);

// Multiply mixed data by (i k_axis) for axis 1 or 2.
CArray horizontal_derivative(Grid const &grid, CArray const &mixed, int axis);

// Zero all modes outside the 2/3-rule band.
void truncate_band(Grid const &grid, CArray &mixed);

// Fraction of spectral energy in the top third of any direction.
Real top_mode_fraction(Grid const &grid, Array const &values);

// Volume quadrature of physical values.
Real integrate(Grid const &grid, Array const &values);

} // namespace chanreg
