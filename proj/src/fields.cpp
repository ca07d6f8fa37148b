#include "chanreg/fields.hpp"

#include <cmath>
#include <limits>

namespace chanreg {

namespace {

void require_same(Grid const &a, Grid const &b, char const *what)
{
  if (&a != &b && !a.same_shape(b)) { throw GridMismatch(std::string(what) + ": grid mismatch"); }
}

Real plane_sum(Grid const &grid, Array const &v) { return v.sum() * grid.cell_area(); }

} // namespace

ScalarField::ScalarField(GridPtr grid) : grid_(std::move(grid)), values_(Array::Zero(grid_->size())) {}

ScalarField::ScalarField(GridPtr grid, Array values) : grid_(std::move(grid)), values_(std::move(values))
{
  if (values_.size() != grid_->size()) { throw GridMismatch("ScalarField: value count does not match grid"); }
}

ScalarField ScalarField::from_mixed(GridPtr grid, CArray mixed)
{
  Array v = horizontal_inverse(*grid, mixed);
  ScalarField f(std::move(grid), std::move(v));
  f.mixed_ = std::move(mixed);
  return f;
}

Array &ScalarField::mutable_values()
{
  mixed_.reset();
  return values_;
}

CArray const &ScalarField::mixed() const
{
  if (!mixed_) { mixed_ = horizontal_forward(*grid_, values_); }
  return *mixed_;
}

ScalarField &ScalarField::operator+=(ScalarField const &o)
{
  require_same(*grid_, o.grid(), "ScalarField +=");
  mutable_values() += o.values();
  resolved_ = resolved_ && o.resolved_;
  return *this;
}

ScalarField &ScalarField::operator-=(ScalarField const &o)
{
  require_same(*grid_, o.grid(), "ScalarField -=");
  mutable_values() -= o.values();
  resolved_ = resolved_ && o.resolved_;
  return *this;
}

ScalarField &ScalarField::operator*=(Real s)
{
  if (mixed_) { *mixed_ *= s; }
  values_ *= s;
  return *this;
}

ScalarField operator+(ScalarField a, ScalarField const &b) { return a += b; }
ScalarField operator-(ScalarField a, ScalarField const &b) { return a -= b; }
ScalarField operator*(Real s, ScalarField a) { return a *= s; }
ScalarField operator-(ScalarField a) { return a *= -1; }

ScalarField product(ScalarField const &a, ScalarField const &b)
{
  require_same(a.grid(), b.grid(), "product");
  return ScalarField(a.grid_ptr(), a.values() * b.values());
}

PlaneField::PlaneField(GridPtr grid) : grid_(std::move(grid)), values_(Array::Zero(grid_->plane_size())) {}

PlaneField::PlaneField(GridPtr grid, Array values) : grid_(std::move(grid)), values_(std::move(values))
{
  if (values_.size() != grid_->plane_size()) { throw GridMismatch("PlaneField: value count does not match grid"); }
}

CArray PlaneField::mixed() const { return plane_forward(*grid_, values_); }

ScalarField PlaneField::extend() const
{
  Array v(grid_->size());
  Index const ps = grid_->plane_size();
  for (Index k = 0; k < grid_->nz(); ++k) { v.segment(k * ps, ps) = values_; }
  return ScalarField(grid_, std::move(v));
}

VectorField::VectorField(GridPtr grid) : comp{ScalarField(grid), ScalarField(grid), ScalarField(grid)} {}

VectorField::VectorField(ScalarField u1, ScalarField u2, ScalarField u3)
  : comp{std::move(u1), std::move(u2), std::move(u3)}
{
  require_same(comp[0].grid(), comp[1].grid(), "VectorField");
  require_same(comp[0].grid(), comp[2].grid(), "VectorField");
}

VectorField operator+(VectorField const &a, VectorField const &b)
{
  VectorField r(a[0] + b[0], a[1] + b[1], a[2] + b[2]);
  r.divergence_free = a.divergence_free && b.divergence_free;
  r.no_slip = a.no_slip && b.no_slip;
  return r;
}

VectorField operator-(VectorField const &a, VectorField const &b)
{
  VectorField r(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
  r.divergence_free = a.divergence_free && b.divergence_free;
  r.no_slip = a.no_slip && b.no_slip;
  return r;
}

VectorField operator*(Real s, VectorField const &a)
{
  VectorField r(s * a[0], s * a[1], s * a[2]);
  r.divergence_free = a.divergence_free;
  r.no_slip = a.no_slip;
  return r;
}

ScalarField diff(ScalarField const &f, int axis)
{
  Grid const &g = f.grid();
  ScalarField out(f.grid_ptr());
  if (axis == 1 || axis == 2) {
    out = ScalarField::from_mixed(f.grid_ptr(), horizontal_derivative(g, f.mixed(), axis));
  } else if (axis == 3) {
    Array v(g.size());
    Eigen::Map<Matrix const> in(f.values().data(), g.plane_size(), g.nz());
    Eigen::Map<Matrix> res(v.data(), g.plane_size(), g.nz());
    res.noalias() = in * g.dz().transpose();
    out = ScalarField(f.grid_ptr(), std::move(v));
  } else {
    throw std::invalid_argument("diff: axis must be 1, 2 or 3");
  }
  out.set_resolved(f.resolved() && top_mode_fraction(g, f.values()) <= resolution_threshold);
  return out;
}

VectorField diff(VectorField const &u, int axis) { return VectorField(diff(u[0], axis), diff(u[1], axis), diff(u[2], axis)); }

VectorField grad(ScalarField const &f) { return VectorField(diff(f, 1), diff(f, 2), diff(f, 3)); }

std::array<ScalarField, 2> grad_h(ScalarField const &f) { return {diff(f, 1), diff(f, 2)}; }

ScalarField divergence(VectorField const &u) { return diff(u[0], 1) + diff(u[1], 2) + diff(u[2], 3); }

ScalarField laplacian_h(ScalarField const &f) { return diff(diff(f, 1), 1) + diff(diff(f, 2), 2); }

ScalarField laplacian(ScalarField const &f) { return laplacian_h(f) + diff(diff(f, 3), 3); }

VectorField laplacian(VectorField const &u) { return VectorField(laplacian(u[0]), laplacian(u[1]), laplacian(u[2])); }

VectorField laplacian_h(VectorField const &u)
{
  return VectorField(laplacian_h(u[0]), laplacian_h(u[1]), laplacian_h(u[2]));
}

namespace {

Real lq_from_abs(Grid const &grid, Array const &absval, Real q, bool plane)
{
  if (!(q >= 1)) { throw std::invalid_argument("norm_lq: q must be >= 1"); }
  if (std::isinf(q)) { return absval.size() ? absval.maxCoeff() : 0; }
  Array const p = absval.pow(q);
  Real const s = plane ? plane_sum(grid, p) : integrate(grid, p);
  return std::pow(s, 1 / q);
}

} // namespace

Real norm_lq(ScalarField const &f, Real q) { return lq_from_abs(f.grid(), f.values().abs(), q, false); }

Real norm_lq(PlaneField const &f, Real q) { return lq_from_abs(f.grid(), f.values().abs(), q, true); }

Real norm_lq(VectorField const &u, Real q)
{
  Array const mag = (u[0].values().square() + u[1].values().square() + u[2].values().square()).sqrt();
  return lq_from_abs(u.grid(), mag, q, false);
}

Real inner_l2(ScalarField const &a, ScalarField const &b)
{
  require_same(a.grid(), b.grid(), "inner_l2");
  return integrate(a.grid(), a.values() * b.values());
}

Real inner_l2(PlaneField const &a, PlaneField const &b)
{
  require_same(a.grid(), b.grid(), "inner_l2");
  return plane_sum(a.grid(), a.values() * b.values());
}

Real inner_l2(VectorField const &a, VectorField const &b)
{
  return inner_l2(a[0], b[0]) + inner_l2(a[1], b[1]) + inner_l2(a[2], b[2]);
}

Real sobolev_norm(ScalarField const &f, int m)
{
  if (m < 0 || m > 2) { throw std::invalid_argument("sobolev_norm: m must be 0, 1 or 2"); }
  Real s = std::pow(norm_lq(f, 2), 2);
  if (m >= 1) {
    std::array<ScalarField, 3> d{diff(f, 1), diff(f, 2), diff(f, 3)};
    for (auto const &di : d) { s += std::pow(norm_lq(di, 2), 2); }
    if (m == 2) {
      for (int a = 0; a < 3; ++a) {
        for (int b = a; b < 3; ++b) { s += std::pow(norm_lq(diff(d[static_cast<size_t>(a)], b + 1), 2), 2); }
      }
    }
  }
  return std::sqrt(s);
}

Real sobolev_norm(PlaneField const &f, int m)
{
  if (m < 0 || m > 2) { throw std::invalid_argument("sobolev_norm: m must be 0, 1 or 2"); }
  Grid const &g = f.grid();
  CArray const c = f.mixed();
  // Parseval on the horizontal box.
  Real s = 0;
  for (Index j = 0; j < g.ny(); ++j) {
    for (Index i = 0; i < g.nx(); ++i) {
      Real const k1 = g.kx(i), k2 = g.ky(j);
      Real w = 1;
      if (m >= 1) { w += k1 * k1 + k2 * k2; }
      if (m == 2) { w += k1 * k1 * k1 * k1 + k2 * k2 * k2 * k2 + k1 * k1 * k2 * k2; }
      s += w * std::norm(c(i + g.nx() * j));
    }
  }
  return std::sqrt(s * g.area());
}

Real sobolev_norm(VectorField const &u, int m)
{
  Real s = 0;
  for (int c = 0; c < 3; ++c) { s += std::pow(sobolev_norm(u[c], m), 2); }
  return std::sqrt(s);
}

Real grad_norm(VectorField const &u)
{
  Real s = 0;
  for (int c = 0; c < 3; ++c) {
    for (int a = 1; a <= 3; ++a) { s += std::pow(norm_lq(diff(u[c], a), 2), 2); }
  }
  return std::sqrt(s);
}

Real grad_h_norm(VectorField const &u)
{
  Real s = 0;
  for (int c = 0; c < 3; ++c) {
    for (int a = 1; a <= 2; ++a) { s += std::pow(norm_lq(diff(u[c], a), 2), 2); }
  }
  return std::sqrt(s);
}

Real grad_h_grad_norm(VectorField const &u)
{
  Real s = 0;
  for (int c = 0; c < 3; ++c) {
    for (int l = 1; l <= 2; ++l) {
      ScalarField const dl = diff(u[c], l);
      for (int j = 1; j <= 3; ++j) { s += std::pow(norm_lq(diff(dl, j), 2), 2); }
    }
  }
  return std::sqrt(s);
}

Real max_divergence(VectorField const &u) { return divergence(u).values().abs().maxCoeff(); }

Real max_wall_value(ScalarField const &f)
{
  Grid const &g = f.grid();
  Index const ps = g.plane_size();
  Real const lo = f.values().head(ps).abs().maxCoeff();
  Real const hi = f.values().tail(ps).abs().maxCoeff();
  return std::max(lo, hi);
}

Real max_wall_value(VectorField const &u)
{
  return std::max({max_wall_value(u[0]), max_wall_value(u[1]), max_wall_value(u[2])});
}

} // namespace chanreg
