#include "chanreg/solver.hpp"

#include <cmath>
#include <map>

#include <Eigen/Cholesky>

#include "chanreg/decomposition.hpp"

namespace chanreg {

Forcing::Forcing(VectorField g, Real amplitude, Real omega) : amplitude_(amplitude), omega_(omega)
{
  g_norm_ = norm_lq(g, 2);
  g_ = std::move(g);
}

VectorField Forcing::value(Real t) const
{
  if (!g_) { throw std::logic_error("Forcing::value: zero forcing has no grid"); }
  return factor(t) * *g_;
}

Real shear_eigenvalue(Grid const &grid, int k)
{
  Real const m = k * pi / (2 * grid.half_height());
  return m * m;
}

VectorField exact_shear_solution(GridPtr const &grid, int k, Real amplitude, Real t, Real nu)
{
  if (k < 1) { throw std::invalid_argument("exact_shear_solution: mode must be >= 1"); }
  Real const m = k * pi / (2 * grid->half_height());
  Real const a = amplitude * std::exp(-nu * m * m * t);
  auto profile = [&](Real z) { return k % 2 ? std::cos(m * z) : std::sin(m * z); };
  Vector gz(grid->nz());
  for (Index n = 0; n < grid->nz(); ++n) { gz(n) = a * profile(grid->z()(n)); }
  gz(0) = 0;
  gz(grid->nz() - 1) = 0;
  Array v(grid->size());
  Index const ps = grid->plane_size();
  for (Index n = 0; n < grid->nz(); ++n) { v.segment(n * ps, ps).setConstant(gz(n)); }
  VectorField u(ScalarField(grid, std::move(v)), ScalarField(grid), ScalarField(grid));
  u.divergence_free = true;
  u.no_slip = true;
  return u;
}

VectorField shear_forcing(GridPtr const &grid, int k, Real amplitude, Real nu)
{
  VectorField f = (nu * shear_eigenvalue(*grid, k)) * exact_shear_solution(grid, k, amplitude, 0, nu);
  f.divergence_free = f.no_slip = false;
  return f;
}

void SolverConfig::validate() const
{
  if (!(dt > 0)) { throw std::invalid_argument("solver.dt must be positive"); }
  if (!(t_end > 0)) { throw std::invalid_argument("solver.t_end must be positive"); }
  if (order != 1 && order != 2) { throw std::invalid_argument("solver.order must be 1 or 2"); }
  if (output_every < 1) { throw std::invalid_argument("solver.output_every must be >= 1"); }
  if (!(cfl_safety > 0)) { throw std::invalid_argument("solver.cfl_safety must be positive"); }
}

namespace {

using Mixed3 = ProjectionContext::Mixed3;

CMatrix mixed_of(ScalarField const &f)
{
  Grid const &g = f.grid();
  return Eigen::Map<CMatrix const>(f.mixed().data(), g.plane_size(), g.nz());
}

CArray flat(CMatrix const &m) { return Eigen::Map<CArray const>(m.data(), m.size()); }

CVector mulc(Matrix const &a, CVector const &v)
{
  CVector out(a.rows());
  out.real() = a * v.real();
  out.imag() = a * v.imag();
  return out;
}

CVector solve_real(Eigen::LLT<Matrix> const &llt, CVector const &rhs)
{
  Vector const re = llt.solve(Vector(rhs.real()));
  Vector const im = llt.solve(Vector(rhs.imag()));
  CVector out(rhs.size());
  out.real() = re;
  out.imag() = im;
  return out;
}

} // namespace

struct Integrator::Impl
{
  GridPtr grid;
  std::shared_ptr<ProjectionContext const> ctx;
  Index ps, nz, ni, r;
  Vector wI, dz_local;
  Matrix dzT, d2T;
  Matrix Phi, DPhi, Kp, Mp, S2p, Kc, LAt, LNt, PhiT;
  Vector kx, ky, kk, cx, cy;
  std::vector<char> active;
  std::vector<Index> cls;
  struct Factors
  {
    Real k2 = 0;
    Eigen::LLT<Matrix> across;
    Eigen::LLT<Matrix> normal;
    Matrix across_rhs; // explicit half of the Crank-Nicolson operator
    Matrix normal_rhs;
  };
  std::map<Index, Factors> factors;
  Mixed3 U;

  struct Loads
  {
    CMatrix along, across, normal;
  };
  std::optional<Loads> prev;

  Real t_base = 0;
  long steps_since_base = 0;
  Real E0 = 0, cumD = 0, cumFU = 0;
  Real E = 0, D = 0, FU = 0;

  Real nu = 1;
  Forcing const *forcing = nullptr;
  bool dealias = true;

  Impl(SimState const &s, SolverConfig const &cfg)
  {
    grid = s.u.grid_ptr();
    Grid const &g = *grid;
    ctx = projection_context(grid);
    ps = g.plane_size();
    nz = g.nz();
    ni = nz - 2;
    nu = s.nu;
    forcing = s.forcing.get();
    dealias = cfg.dealias;

    Matrix const &Dz = g.dz();
    dzT = Dz.transpose();
    d2T = g.dzz().transpose();
    Matrix const W = g.vertical_weights().asDiagonal();
    wI = g.vertical_weights().segment(1, ni);
    Phi = ctx->clamped_basis();
    r = Phi.cols();
    DPhi = Dz * Phi;
    Matrix const D2Phi = Dz * DPhi;
    Kp = DPhi.transpose() * W * DPhi;
    Mp = Phi.transpose() * W * Phi;
    S2p = D2Phi.transpose() * W * D2Phi;
    Kc = (Dz.transpose() * W * Dz).block(1, 1, ni, ni);
    LAt = (W * DPhi).transpose();
    LNt = (W * Phi).transpose();
    PhiT = Phi.transpose();

    dz_local.resize(nz);
    for (Index k = 0; k < nz; ++k) {
      Real lo = k > 0 ? g.z()(k) - g.z()(k - 1) : std::numeric_limits<Real>::infinity();
      Real hi = k + 1 < nz ? g.z()(k + 1) - g.z()(k) : std::numeric_limits<Real>::infinity();
      dz_local(k) = std::min(lo, hi);
    }

    kx.resize(ps);
    ky.resize(ps);
    kk.resize(ps);
    cx.resize(ps);
    cy.resize(ps);
    active.assign(static_cast<size_t>(ps), 0);
    cls.assign(static_cast<size_t>(ps), 0);
    for (Index j = 0; j < g.ny(); ++j) {
      for (Index i = 0; i < g.nx(); ++i) {
        Index const row = i + g.nx() * j;
        kx(row) = g.kx(i);
        ky(row) = g.ky(j);
        kk(row) = std::hypot(kx(row), ky(row));
        cx(row) = kk(row) > 0 ? kx(row) / kk(row) : 1;
        cy(row) = kk(row) > 0 ? ky(row) / kk(row) : 0;
        bool const nyquist = i == g.nx() / 2 || j == g.ny() / 2;
        active[static_cast<size_t>(row)] = dealias ? g.in_band(i, j) : !nyquist;
        cls[static_cast<size_t>(row)] = std::abs(g.mode_x(i)) + (g.nx() / 2 + 1) * std::abs(g.mode_y(j));
      }
    }

    // Start from the nearest element of the discrete space.
    for (int c = 0; c < 3; ++c) { U[static_cast<size_t>(c)] = mixed_of(s.u[c]); }
    for (auto &c : U) { restrict_active(c); }
    U = ctx->no_slip(U);
    for (auto &c : U) { restrict_active(c); }
  }

  void restrict_active(CMatrix &m) const
  {
    for (Index row = 0; row < ps; ++row) {
      if (!active[static_cast<size_t>(row)]) { m.row(row).setZero(); }
    }
  }

  void factorize(Real dt)
  {
    factors.clear();
    Real const h = nu * dt / 2;
    Matrix const MI = wI.asDiagonal();
    for (Index row = 0; row < ps; ++row) {
      if (!active[static_cast<size_t>(row)]) { continue; }
      Index const c = cls[static_cast<size_t>(row)];
      if (factors.count(c)) { continue; }
      Factors f;
      Real const k2 = kk(row) * kk(row);
      f.k2 = k2;
      f.across.compute(MI + h * (Kc + k2 * MI));
      f.across_rhs = MI - h * (Kc + k2 * MI);
      if (k2 > 0) {
        Matrix const M = Kp / k2 + Mp;
        Matrix const S = S2p / k2 + 2 * Kp + k2 * Mp;
        f.normal.compute(M + h * S);
        f.normal_rhs = M - h * S;
      }
      if (f.across.info() != Eigen::Success || (k2 > 0 && f.normal.info() != Eigen::Success)) {
        throw NumericalAbort("solver: implicit system is not positive definite at horizontal mode class " +
                             std::to_string(c));
      }
      factors.emplace(c, std::move(f));
    }
  }

  Array physical(CMatrix const &m) const { return horizontal_inverse(*grid, flat(m)); }

  CMatrix forward(Array const &v) const
  {
    CArray f = horizontal_forward(*grid, v);
    return Eigen::Map<CMatrix const>(f.data(), ps, nz);
  }

  CMatrix dx(CMatrix const &m, int axis) const
  {
    Vector const &k = axis == 1 ? kx : ky;
    return k.cast<Complex>().asDiagonal() * m * Complex(0, 1);
  }

  CMatrix dz(CMatrix const &m) const { return mul_real(m, dzT); }

  // f(t) - (u . grad) u on mixed data.
  Mixed3 explicit_terms(VectorField const &u, Real t) const
  {
    Mixed3 n;
    for (size_t k = 0; k < 3; ++k) {
      Array const prod = u[0].values() * physical(dx(U[k], 1)) + u[1].values() * physical(dx(U[k], 2)) +
                         u[2].values() * physical(dz(U[k]));
      n[k] = -forward(prod);
    }
    if (forcing && !forcing->is_zero()) {
      Real const a = forcing->factor(t);
      for (size_t k = 0; k < 3; ++k) { n[k] += a * mixed_of((*forcing->profile())[static_cast<int>(k)]); }
    }
    return n;
  }

  Loads project_loads(Mixed3 const &n) const
  {
    Loads l{CMatrix::Zero(ps, ni), CMatrix::Zero(ps, ni), CMatrix::Zero(ps, r)};
    for (Index row = 0; row < ps; ++row) {
      if (!active[static_cast<size_t>(row)]) { continue; }
      CVector const n1 = n[0].row(row).transpose(), n2 = n[1].row(row).transpose(), n3 = n[2].row(row).transpose();
      CVector const along = cx(row) * n1 + cy(row) * n2;
      CVector const across = cx(row) * n2 - cy(row) * n1;
      l.along.row(row) = (wI.cast<Complex>().array() * along.segment(1, ni).array()).matrix().transpose();
      l.across.row(row) = (wI.cast<Complex>().array() * across.segment(1, ni).array()).matrix().transpose();
      if (kk(row) > 0) {
        CVector const y = Complex(0, -1 / kk(row)) * mulc(LAt, along) + mulc(LNt, n3);
        l.normal.row(row) = y.transpose();
      }
    }
    return l;
  }

  Mixed3 advance(Loads const &load, Real dt) const
  {
    Mixed3 out{CMatrix::Zero(ps, nz), CMatrix::Zero(ps, nz), CMatrix::Zero(ps, nz)};
    auto tangential = [&](Factors const &f, CVector const &v, CVector const &lv) {
      CVector const rhs = mulc(f.across_rhs, v.segment(1, ni)) + dt * lv;
      CVector full = CVector::Zero(nz);
      full.segment(1, ni) = solve_real(f.across, rhs);
      return full;
    };
    for (Index row = 0; row < ps; ++row) {
      if (!active[static_cast<size_t>(row)]) { continue; }
      Factors const &f = factors.at(cls[static_cast<size_t>(row)]);
      CVector const u1 = U[0].row(row).transpose(), u2 = U[1].row(row).transpose(), u3 = U[2].row(row).transpose();
      CVector const along = cx(row) * u1 + cy(row) * u2;
      CVector const across = cx(row) * u2 - cy(row) * u1;
      CVector const c_new = tangential(f, across, load.across.row(row).transpose());
      CVector a_new, w_new;
      if (f.k2 > 0) {
        CVector const rhs = mulc(f.normal_rhs, mulc(PhiT, u3)) + dt * CVector(load.normal.row(row).transpose());
        CVector const yn = solve_real(f.normal, rhs);
        w_new = mulc(Phi, yn);
        a_new = Complex(0, 1 / kk(row)) * mulc(DPhi, yn);
      } else {
        a_new = tangential(f, along, load.along.row(row).transpose());
        w_new = CVector::Zero(nz);
      }
      out[0].row(row) = (cx(row) * a_new - cy(row) * c_new).transpose();
      out[1].row(row) = (cy(row) * a_new + cx(row) * c_new).transpose();
      out[2].row(row) = w_new.transpose();
    }
    return out;
  }

  Real norm2(CMatrix const &m) const
  {
    return grid->area() * (m.cwiseAbs2() * grid->vertical_weights()).sum();
  }

  Real inner(CMatrix const &a, CMatrix const &b) const
  {
    return grid->area() * ((a.array() * b.conjugate().array()).real().matrix() * grid->vertical_weights()).sum();
  }

  Real grad2(Mixed3 const &m) const
  {
    Real s = 0;
    for (auto const &c : m) { s += norm2(dx(c, 1)) + norm2(dx(c, 2)) + norm2(dz(c)); }
    return s;
  }

  Real energy(Mixed3 const &m) const { return norm2(m[0]) + norm2(m[1]) + norm2(m[2]); }

  Real forcing_dot(Mixed3 const &m, Real t) const
  {
    if (!forcing || forcing->is_zero()) { return 0; }
    Real s = 0;
    for (int c = 0; c < 3; ++c) { s += inner(mixed_of((*forcing->profile())[c]), m[static_cast<size_t>(c)]); }
    return forcing->factor(t) * s;
  }
};

Integrator::Integrator(SimState state, SolverConfig config)
  : state_(std::move(state)), config_(config), dt_(config.dt)
{
  config_.validate();
  if (!(state_.nu > 0)) { throw std::invalid_argument("Integrator: viscosity must be positive"); }
  if (!state_.u.divergence_free || !state_.u.no_slip) {
    throw SpaceViolation("Integrator: initial velocity must be divergence-free and no-slip");
  }
  if (!state_.forcing) { state_.forcing = std::make_shared<Forcing>(); }
  if (auto const *g = state_.forcing->profile(); g && !g->grid().same_shape(state_.u.grid())) {
    throw GridMismatch("Integrator: forcing grid does not match the velocity grid");
  }
  impl_ = std::make_unique<Impl>(state_, config_);
  impl_->factorize(dt_);
  impl_->t_base = state_.t;
  for (int c = 0; c < 3; ++c) {
    state_.u[c] = ScalarField::from_mixed(state_.u.grid_ptr(), flat(impl_->U[static_cast<size_t>(c)]));
  }
  state_.u.divergence_free = state_.u.no_slip = true;
  impl_->E = impl_->E0 = impl_->energy(impl_->U);
  impl_->D = impl_->grad2(impl_->U);
  impl_->FU = impl_->forcing_dot(impl_->U, state_.t);
}

Integrator::~Integrator() = default;
Integrator::Integrator(Integrator &&) noexcept = default;

Real Integrator::cfl() const
{
  Grid const &g = state_.u.grid();
  Real const dx = g.px() / static_cast<Real>(g.nx()), dy = g.py() / static_cast<Real>(g.ny());
  Index const ps = g.plane_size();
  Real worst = 0;
  for (Index k = 0; k < g.nz(); ++k) {
    Array const c = state_.u[0].values().segment(k * ps, ps).abs() / dx +
                    state_.u[1].values().segment(k * ps, ps).abs() / dy +
                    state_.u[2].values().segment(k * ps, ps).abs() / impl_->dz_local(k);
    worst = std::max(worst, c.maxCoeff());
  }
  return worst * dt_;
}

void Integrator::step()
{
  Impl &m = *impl_;
  Real const c = cfl();
  if (c > config_.cfl_safety) {
    if (!config_.adaptive) {
      throw NumericalAbort("CFL number " + std::to_string(c) + " exceeds " + std::to_string(config_.cfl_safety) +
                           " at t = " + std::to_string(state_.t) + "; reduce dt to at most " +
                           std::to_string(dt_ * config_.cfl_safety / c));
    }
    dt_ *= 0.9 * config_.cfl_safety / c;
    m.factorize(dt_);
    m.prev.reset();
    m.t_base = state_.t;
    m.steps_since_base = 0;
  }

  Impl::Loads const now = m.project_loads(m.explicit_terms(state_.u, state_.t));
  Impl::Loads load = now;
  if (config_.order == 2 && m.prev) {
    load.along = 1.5 * now.along - 0.5 * m.prev->along;
    load.across = 1.5 * now.across - 0.5 * m.prev->across;
    load.normal = 1.5 * now.normal - 0.5 * m.prev->normal;
  }
  Mixed3 next = m.advance(load, dt_);
  for (auto const &comp : next) {
    if (!comp.allFinite()) {
      throw NumericalAbort("non-finite velocity after the step from t = " + std::to_string(state_.t));
    }
  }

  Real const t_new = m.t_base + static_cast<Real>(m.steps_since_base + 1) * dt_;
  Real const E = m.energy(next), D = m.grad2(next), FU = m.forcing_dot(next, t_new);
  m.cumD += 0.5 * dt_ * (m.D + D);
  m.cumFU += 0.5 * dt_ * (m.FU + FU);
  m.E = E;
  m.D = D;
  m.FU = FU;
  m.U = std::move(next);
  m.prev = now;
  ++m.steps_since_base;

  GridPtr const grid = state_.u.grid_ptr();
  VectorField u(ScalarField::from_mixed(grid, flat(m.U[0])), ScalarField::from_mixed(grid, flat(m.U[1])),
                ScalarField::from_mixed(grid, flat(m.U[2])));
  u.divergence_free = u.no_slip = true;
  state_.u = std::move(u);
  state_.t = t_new;
  ++state_.steps;
}

DiagnosticsRecord Integrator::diagnostics() const
{
  Impl const &m = *impl_;
  Grid const &g = *m.grid;
  DiagnosticsRecord d;
  d.t = state_.t;
  d.E = m.E;
  d.D = m.D;
  for (auto const &c : m.U) {
    d.Dh += m.norm2(m.dx(c, 1)) + m.norm2(m.dx(c, 2));
    d.dz_u2 += m.norm2(m.dz(c));
    for (int l = 1; l <= 2; ++l) {
      CMatrix const dl = m.dx(c, l);
      d.dh_grad2 += m.norm2(m.dx(dl, 1)) + m.norm2(m.dx(dl, 2)) + m.norm2(m.dz(dl));
    }
  }
  Mixed3 lap;
  Vector const k2 = m.kx.array().square() + m.ky.array().square();
  for (size_t c = 0; c < 3; ++c) {
    lap[c] = -(k2.cast<Complex>().asDiagonal() * m.U[c]) + mul_real(m.U[c], m.d2T);
  }
  Mixed3 au = m.ctx->leray(lap);
  for (size_t c = 0; c < 3; ++c) {
    au[c] *= -1;
    d.Au2 += m.norm2(au[c]);
    d.V2 += m.inner(m.U[c], au[c]);
  }
  // Baroclinic part of u3: subtract the per-mode vertical mean.
  CVector const mean = m.U[2] * g.vertical_weights().cast<Complex>() / (2 * g.half_height());
  CMatrix const tilde = m.U[2] - mean * CVector::Ones(g.nz()).transpose();
  d.crit = std::sqrt(m.norm2(m.dx(tilde, 1)) + m.norm2(m.dx(tilde, 2)) + m.norm2(m.dz(tilde)));
  d.cumD = m.cumD;
  d.f_norm = state_.forcing->norm(state_.t);
  d.f_dot_u = m.FU;
  d.resid = m.E - m.E0 + 2 * state_.nu * m.cumD - 2 * m.cumFU;
  return d;
}

SimState step(SimState const &state, SolverConfig const &config)
{
  Integrator it(state, config);
  it.step();
  return it.state();
}

RunResult run(SimState initial, SolverConfig const &config, RunObserver const &observer)
{
  Integrator it(std::move(initial), config);
  Trajectory records;
  auto record = [&] {
    records.push_back(it.diagnostics());
    if (observer) { observer(records.back(), it.state()); }
  };
  record();
  long since_output = 0;
  bool aborted = false;
  std::string message;
  try {
    while (it.state().t + 1e-9 * it.dt() < config.t_end) {
      it.step();
      ++since_output;
      bool const last = !(it.state().t + 1e-9 * it.dt() < config.t_end);
      if (since_output == config.output_every || last) {
        record();
        since_output = 0;
      }
    }
  } catch (NumericalAbort const &e) {
    aborted = true;
    message = e.what();
  }
  return RunResult{std::move(records), it.state(), aborted, std::move(message)};
}

} // namespace chanreg
