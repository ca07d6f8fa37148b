#include "chanreg/stokes.hpp"

#include <cmath>
#include <mutex>
#include <vector>

#include <Eigen/Eigenvalues>

namespace chanreg {

namespace {

using CMap = Eigen::Map<CMatrix const>;

CMap plane_view(Grid const &g, CArray const &mixed) { return CMap(mixed.data(), g.plane_size(), g.nz()); }

CArray flatten(CMatrix const &m) { return Eigen::Map<CArray const>(m.data(), m.size()); }

struct ModeTable
{
  Vector cx, cy, inv_k;
};

// Unit vector along k per horizontal mode; (1, 0) and inv_k = 0 where k vanishes.
ModeTable mode_table(Grid const &g)
{
  Index const ps = g.plane_size();
  ModeTable t{Vector(ps), Vector(ps), Vector(ps)};
  for (Index j = 0; j < g.ny(); ++j) {
    for (Index i = 0; i < g.nx(); ++i) {
      Index const r = i + g.nx() * j;
      Real const kx = g.kx(i), ky = g.ky(j), kk = std::hypot(kx, ky);
      if (kk > 0) {
        t.cx(r) = kx / kk;
        t.cy(r) = ky / kk;
        t.inv_k(r) = 1 / kk;
      } else {
        t.cx(r) = 1;
        t.cy(r) = 0;
        t.inv_k(r) = 0;
      }
    }
  }
  return t;
}

} // namespace

ProjectionContext::ProjectionContext(GridPtr grid) : grid_(std::move(grid))
{
  Grid const &g = *grid_;
  Index const nz = g.nz();
  Matrix const &D = g.dz();
  Matrix const W = g.vertical_weights().asDiagonal();

  // Clamped profiles: nullspace of the wall value and wall slope rows.
  Matrix C(4, nz);
  C.setZero();
  C(0, 0) = 1;
  C(1, nz - 1) = 1;
  C.row(2) = D.row(0);
  C.row(3) = D.row(nz - 1);
  Eigen::JacobiSVD<Matrix> svd(C, Eigen::ComputeFullV);
  phi_ = svd.matrixV().rightCols(nz - 4);
  // Exact zeros at the walls rather than SVD roundoff.
  phi_.row(0).setZero();
  phi_.row(nz - 1).setZero();

  Matrix interior = Matrix::Zero(nz, nz - 2);
  interior.block(1, 0, nz - 2, nz - 2).setIdentity();

  auto build = [&](Matrix const &basis) {
    Matrix const DB = D * basis;
    Matrix const K = DB.transpose() * W * DB;
    Matrix const M = basis.transpose() * W * basis;
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(K, M);
    if (es.info() != Eigen::Success) {
      throw NumericalAbort("ProjectionContext: generalized eigensolve failed for nz = " + std::to_string(nz));
    }
    Space s;
    s.basis = basis * es.eigenvectors();
    s.basis.row(0).setZero();
    s.basis.row(nz - 1).setZero();
    s.dbasis = D * s.basis;
    s.eigvals = es.eigenvalues();
    s.from_along = W * s.dbasis;
    s.from_normal = W * s.basis;
    return s;
  };
  h_ = build(interior);
  x_ = build(phi_);
}

ProjectionContext::Mixed3 ProjectionContext::apply(Mixed3 const &u, Space const &s, bool clamp_walls) const
{
  Grid const &g = *grid_;
  Index const ps = g.plane_size(), nz = g.nz(), r = s.eigvals.size();
  for (auto const &c : u) {
    if (c.rows() != ps || c.cols() != nz) { throw GridMismatch("projection: mixed data shape mismatch"); }
  }
  ModeTable const t = mode_table(g);
  CMatrix const &U1 = u[0], &U2 = u[1], &U3 = u[2];

  CMatrix A = t.cx.cast<Complex>().asDiagonal() * U1 + t.cy.cast<Complex>().asDiagonal() * U2;
  CMatrix Cr = t.cx.cast<Complex>().asDiagonal() * U2 - t.cy.cast<Complex>().asDiagonal() * U1;

  // Reduced right-hand side in the eigenbasis, then the diagonal solve.
  Complex const I(0, 1);
  CVector const minus_i_over_k = -I * t.inv_k.cast<Complex>();
  CMatrix Y = minus_i_over_k.asDiagonal() * mul_real(A, s.from_along) + mul_real(U3, s.from_normal);
  for (Index c = 0; c < r; ++c) {
    for (Index row = 0; row < ps; ++row) {
      Real const ik = t.inv_k(row);
      Y(row, c) *= ik > 0 ? 1 / (s.eigvals(c) * ik * ik + 1) : 0.0;
    }
  }
  CMatrix W3 = mul_real(Y, s.basis.transpose());
  CMatrix An = (-minus_i_over_k).asDiagonal() * mul_real(Y, s.dbasis.transpose());
  for (Index row = 0; row < ps; ++row) {
    if (t.inv_k(row) == 0) { An.row(row) = A.row(row); }
  }
  if (clamp_walls) {
    An.col(0).setZero();
    An.col(nz - 1).setZero();
    Cr.col(0).setZero();
    Cr.col(nz - 1).setZero();
  }
  for (Index row = 0; row < ps; ++row) {
    if (!std::isfinite(std::abs(An.row(row).sum())) || !std::isfinite(std::abs(W3.row(row).sum()))) {
      throw NumericalAbort("projection: non-finite vertical solve at horizontal mode (" +
                           std::to_string(g.mode_x(row % g.nx())) + ", " + std::to_string(g.mode_y(row / g.nx())) +
                           ")");
    }
  }
  return {t.cx.cast<Complex>().asDiagonal() * An - t.cy.cast<Complex>().asDiagonal() * Cr,
          t.cy.cast<Complex>().asDiagonal() * An + t.cx.cast<Complex>().asDiagonal() * Cr, std::move(W3)};
}

VectorField ProjectionContext::apply(VectorField const &u, Space const &s, bool clamp_walls) const
{
  Grid const &g = *grid_;
  if (!g.same_shape(u.grid())) { throw GridMismatch("projection: grid mismatch"); }
  Mixed3 in;
  for (int c = 0; c < 3; ++c) { in[static_cast<size_t>(c)] = plane_view(g, u[c].mixed()); }
  Mixed3 const p = apply(in, s, clamp_walls);
  VectorField out(ScalarField::from_mixed(grid_, flatten(p[0])), ScalarField::from_mixed(grid_, flatten(p[1])),
                  ScalarField::from_mixed(grid_, flatten(p[2])));
  for (int c = 0; c < 3; ++c) { out[c].set_resolved(u[c].resolved()); }
  out.divergence_free = true;
  out.no_slip = clamp_walls;
  return out;
}

VectorField ProjectionContext::leray(VectorField const &u) const { return apply(u, h_, false); }

VectorField ProjectionContext::no_slip(VectorField const &u) const { return apply(u, x_, true); }

std::shared_ptr<ProjectionContext const> projection_context(GridPtr const &grid)
{
  static std::mutex mutex;
  static std::vector<std::shared_ptr<ProjectionContext const>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  for (auto const &c : cache) {
    if (c->grid().same_shape(*grid)) { return c; }
  }
  if (cache.size() >= 8) { cache.erase(cache.begin()); }
  cache.push_back(std::make_shared<ProjectionContext const>(grid));
  return cache.back();
}

VectorField leray_project(VectorField const &u) { return projection_context(u.grid_ptr())->leray(u); }

VectorField project_no_slip(VectorField const &u) { return projection_context(u.grid_ptr())->no_slip(u); }

namespace {

void require_space(VectorField const &u, char const *what)
{
  if (!u.divergence_free || !u.no_slip) {
    throw SpaceViolation(std::string(what) + ": input must be divergence-free and no-slip");
  }
}

} // namespace

VectorField stokes_apply(VectorField const &u)
{
  require_space(u, "stokes_apply");
  VectorField out = -1.0 * leray_project(laplacian(u));
  out.no_slip = false;
  return out;
}

VectorField convective_term(VectorField const &u, VectorField const &v)
{
  Grid const &g = u.grid();
  if (!g.same_shape(v.grid())) { throw GridMismatch("convective_term: grid mismatch"); }
  bool resolved = true;
  std::array<Array, 3> uj;
  std::array<CArray, 3> vk;
  for (int c = 0; c < 3; ++c) {
    CArray m = u[c].mixed();
    truncate_band(g, m);
    uj[static_cast<size_t>(c)] = horizontal_inverse(g, m);
    vk[static_cast<size_t>(c)] = v[c].mixed();
    truncate_band(g, vk[static_cast<size_t>(c)]);
    resolved = resolved && u[c].resolved() && v[c].resolved() &&
               top_mode_fraction(g, u[c].values()) <= resolution_threshold &&
               top_mode_fraction(g, v[c].values()) <= resolution_threshold;
  }
  VectorField out(u.grid_ptr());
  for (size_t k = 0; k < 3; ++k) {
    Array n = uj[0] * horizontal_inverse(g, horizontal_derivative(g, vk[k], 1)) +
              uj[1] * horizontal_inverse(g, horizontal_derivative(g, vk[k], 2)) +
              uj[2] * horizontal_inverse(g, apply_vertical(g, g.dz(), vk[k]));
    CArray m = horizontal_forward(g, n);
    truncate_band(g, m);
    out.comp[k] = ScalarField::from_mixed(u.grid_ptr(), std::move(m));
    out.comp[k].set_resolved(resolved);
  }
  return out;
}

VectorField bilinear_b(VectorField const &u, VectorField const &v) { return leray_project(convective_term(u, v)); }

Real v_norm(VectorField const &u)
{
  require_space(u, "v_norm");
  Real const s = inner_l2(u, stokes_apply(u));
  if (s < 0) {
    Real const scale = std::pow(grad_norm(u), 2);
    if (-s > 1e-12 * scale + 1e-300) {
      throw std::logic_error("v_norm: negative <u, Au>; the projection is not orthogonal");
    }
    return 0;
  }
  return std::sqrt(s);
}

} // namespace chanreg
