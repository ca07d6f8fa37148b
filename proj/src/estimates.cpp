#include "chanreg/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "chanreg/decomposition.hpp"

namespace chanreg {

namespace {

constexpr Real inf = std::numeric_limits<Real>::infinity();

void require_positive(Real v, char const *what)
{
  if (!(v > 0) || !std::isfinite(v)) { throw std::invalid_argument(std::string(what) + " must be positive and finite"); }
}

void require_increasing(Trajectory const &traj)
{
  for (size_t n = 1; n < traj.size(); ++n) {
    if (!(traj[n].t > traj[n - 1].t)) { throw std::invalid_argument("trajectory times must be strictly increasing"); }
  }
}

// exp(a) * b for a, b >= 0 without intermediate overflow.
Real exp_times(Real a, Real b)
{
  if (std::isnan(a) || std::isnan(b)) { return std::numeric_limits<Real>::quiet_NaN(); }
  if (b == 0) { return 0; }
  if (a < 700) {
    Real const v = std::exp(a) * b;
    return std::isfinite(v) ? v : inf;
  }
  Real const lg = a + std::log(b);
  return lg < std::log(std::numeric_limits<Real>::max()) ? std::exp(lg) : inf;
}

std::vector<Real> cumulative_trapezoid(std::vector<Real> const &t, std::vector<Real> const &f)
{
  std::vector<Real> out(t.size(), 0.0);
  for (size_t n = 1; n < t.size(); ++n) { out[n] = out[n - 1] + 0.5 * (t[n] - t[n - 1]) * (f[n] + f[n - 1]); }
  return out;
}

template <typename Fn> std::vector<Real> column(Trajectory const &traj, Fn &&fn)
{
  std::vector<Real> v;
  v.reserve(traj.size());
  for (auto const &r : traj) { v.push_back(fn(r)); }
  return v;
}

// Checks lhs <= base + C * factor per sample. The tolerance absorbs roundoff in lhs - base.
BoundReport linear_check(std::string name, std::vector<Real> const &t, std::vector<Real> const &lhs,
                         std::vector<Real> const &base, std::vector<Real> const &factor, Real C, Real tol)
{
  BoundReport r;
  r.name = std::move(name);
  r.constant = C;
  r.samples = static_cast<long>(t.size());
  Real worst = -inf;
  for (size_t n = 0; n < t.size(); ++n) {
    Real const excess = lhs[n] - base[n];
    Real const slack = tol * (std::abs(lhs[n]) + std::abs(base[n]));
    if (excess > slack) {
      r.min_constant = factor[n] > 0 ? std::max(r.min_constant, excess / factor[n]) : inf;
    }
    Real const bound = base[n] + C * factor[n];
    if (lhs[n] > bound + slack) { ++r.violations; }
    if (lhs[n] - bound > worst) {
      worst = lhs[n] - bound;
      r.t_worst = t[n];
      r.bound = bound;
      r.measured = lhs[n];
    }
  }
  r.margin = r.bound - r.measured;
  if (r.violations == 0 && r.margin < 0) { r.margin = 0; }
  return r;
}

// Centered difference of a sampled series at interior index n.
Real centered(std::vector<Real> const &t, std::vector<Real> const &y, size_t n)
{
  return (y[n + 1] - y[n - 1]) / (t[n + 1] - t[n - 1]);
}

// Relative size of the second difference against the first: large values mean the
// cadence cannot resolve the derivative.
Real derivative_noise(std::vector<Real> const &y)
{
  Real worst = 0;
  for (size_t n = 1; n + 1 < y.size(); ++n) {
    Real const d1 = std::abs(y[n + 1] - y[n - 1]) / 2;
    Real const d2 = std::abs(y[n + 1] - 2 * y[n] + y[n - 1]);
    Real const scale = d1 + 1e-14 * std::abs(y[n]) + std::numeric_limits<Real>::min();
    worst = std::max(worst, d2 / scale);
  }
  return worst;
}

} // namespace

Real criterion_diag(VectorField const &u)
{
  ScalarField const w = baroclinic(u[2]).field();
  Real s = 0;
  for (int a = 1; a <= 3; ++a) { s += std::pow(norm_lq(diff(w, a), 2), 2); }
  return std::sqrt(s);
}

Real forcing_sup(std::vector<VectorField> const &samples)
{
  if (samples.empty()) { throw std::invalid_argument("forcing_sup: no samples"); }
  Real m = 0;
  for (auto const &f : samples) { m = std::max(m, norm_lq(f, 2)); }
  return m;
}

Real forcing_sup(Forcing const &f, std::vector<Real> const &times)
{
  if (times.empty()) { throw std::invalid_argument("forcing_sup: no sample times"); }
  Real m = 0;
  for (Real t : times) { m = std::max(m, f.norm(t)); }
  return m;
}

Real bound_k1(Real F, Real L, Real nu, Real T, Real u0_l2, Real C)
{
  require_positive(L, "bound_k1: L");
  require_positive(nu, "bound_k1: nu");
  require_positive(T, "bound_k1: T");
  require_positive(C, "bound_k1: C");
  if (!(F >= 0) || !(u0_l2 >= 0)) { throw std::invalid_argument("bound_k1: F and ||u0|| must be nonnegative"); }
  return C * F * F * (std::pow(L, 4) + nu * T) / (nu * nu) + 2 * u0_l2 * u0_l2;
}

Real bound_k2(Real K1, Real T, Real sup_crit, Real u0_h1, Real F, Real C)
{
  Real const K1sq = K1 * K1;
  Real const exponent = C * K1sq + C * (T + K1sq) * std::pow(sup_crit, 4);
  return exp_times(exponent, u0_h1 * u0_h1 + F * F + C * K1sq);
}

Real bound_k_final(Real K1, Real K2, Real u0_h1, Real F, Real C)
{
  Real const exponent = C * std::pow(K2, 4.0 / 3.0) * std::pow(K1, 2.0 / 3.0);
  return exp_times(exponent, u0_h1 * u0_h1 + F * F);
}

EnergyBudget energy_budget(Trajectory const &traj, Real nu, Real tolerance)
{
  require_increasing(traj);
  EnergyBudget b;
  if (traj.empty()) { return b; }
  auto const t = column(traj, [](auto const &r) { return r.t; });
  auto const D = column(traj, [](auto const &r) { return r.D; });
  auto const fu = column(traj, [](auto const &r) { return r.f_dot_u; });
  auto const iD = cumulative_trapezoid(t, D);
  auto const ifu = cumulative_trapezoid(t, fu);
  b.residual.resize(traj.size());
  for (size_t n = 0; n < traj.size(); ++n) {
    b.residual[n] = traj[n].E - traj[0].E + 2 * nu * iD[n] - 2 * ifu[n];
    b.max_abs = std::max(b.max_abs, std::abs(b.residual[n]));
  }
  for (size_t n = 1; n + 1 < traj.size(); ++n) {
    Real const h = 0.5 * (t[n + 1] - t[n - 1]);
    Real const d2 = 2 * nu * std::abs(D[n + 1] - 2 * D[n] + D[n - 1]) + 2 * std::abs(fu[n + 1] - 2 * fu[n] + fu[n - 1]);
    b.quadrature_error += h * d2 / 12;
  }
  if (b.quadrature_error > tolerance) {
    b.warnings.push_back("output cadence too coarse for the energy budget: estimated trapezoid error " +
                         std::to_string(b.quadrature_error));
  }
  return b;
}

TrajectoryParams trajectory_params(SimState const &initial, SolverConfig const &cfg)
{
  TrajectoryParams p;
  p.nu = initial.nu;
  p.L = initial.u.grid().half_height();
  p.T = cfg.t_end;
  p.u0_l2sq = std::pow(norm_lq(initial.u, 2), 2);
  p.u0_h1sq = p.u0_l2sq + std::pow(grad_norm(initial.u), 2);
  if (initial.forcing && !initial.forcing->is_zero()) {
    long const n = std::clamp(static_cast<long>(std::ceil(cfg.t_end / cfg.dt)), 1L, 10000L);
    std::vector<Real> times;
    for (long i = 0; i <= n; ++i) { times.push_back(cfg.t_end * static_cast<Real>(i) / static_cast<Real>(n)); }
    p.F = forcing_sup(*initial.forcing, times);
  }
  return p;
}

std::pair<BoundReport, BoundReport> decay_bound_check(Trajectory const &traj, TrajectoryParams const &p, Real C)
{
  require_increasing(traj);
  require_positive(p.nu, "decay_bound_check: nu");
  require_positive(p.L, "decay_bound_check: L");
  auto const t = column(traj, [](auto const &r) { return r.t; });
  Real const E0 = traj.empty() ? 0 : traj.front().E;
  Real const F2 = p.F * p.F;
  auto const E = column(traj, [](auto const &r) { return r.E; });
  auto const base_e = column(traj, [&](auto const &r) { return std::exp(-p.nu * r.t / (p.L * p.L)) * E0; });
  std::vector<Real> const fac_e(t.size(), std::pow(p.L, 4) * F2 / (p.nu * p.nu));
  auto const diss = column(traj, [&](auto const &r) { return p.nu * r.cumD; });
  std::vector<Real> const base_d(t.size(), E0);
  auto const fac_d = column(traj, [&](auto const &r) { return p.L * p.L * F2 * r.t / p.nu; });

  std::pair<BoundReport, BoundReport> out{linear_check("energy_decay", t, E, base_e, fac_e, C, 1e-10),
                                          linear_check("dissipation_growth", t, diss, base_d, fac_d, C, 1e-10)};
  for (auto *r : {&out.first, &out.second}) {
    r->inputs = {{"nu", p.nu}, {"L", p.L}, {"F", p.F}, {"E0", E0}};
  }
  return out;
}

BoundReport k1_check(Trajectory const &traj, TrajectoryParams const &p, Real C)
{
  require_increasing(traj);
  auto const t = column(traj, [](auto const &r) { return r.t; });
  auto const lhs = column(traj, [&](auto const &r) { return r.E + p.nu * r.cumD; });
  Real const E0 = traj.empty() ? p.u0_l2sq : traj.front().E;
  std::vector<Real> const base(t.size(), 2 * E0);
  Real const fac = p.F * p.F * (std::pow(p.L, 4) + p.nu * p.T) / (p.nu * p.nu);
  std::vector<Real> const factor(t.size(), fac);
  BoundReport r = linear_check("K1", t, lhs, base, factor, C, 1e-10);
  r.inputs = {{"F", p.F}, {"L", p.L}, {"nu", p.nu}, {"T", p.T}, {"u0_l2", std::sqrt(E0)}};
  return r;
}

BoundReport gronwall_check(std::vector<Real> const &t, std::vector<Real> const &y, std::vector<Real> const &a,
                           std::vector<Real> const &b)
{
  size_t const n = t.size();
  if (n == 0 || y.size() != n || a.size() != n || b.size() != n) {
    throw std::invalid_argument("gronwall_check: series must be nonempty and of equal length");
  }
  bool uniform = true;
  for (size_t i = 1; i < n; ++i) {
    if (!(t[i] > t[i - 1])) { throw std::invalid_argument("gronwall_check: times must be strictly increasing"); }
    if (i > 1 && std::abs((t[i] - t[i - 1]) - (t[1] - t[0])) > 1e-9 * (t[1] - t[0])) { uniform = false; }
  }
  auto const A = cumulative_trapezoid(t, a);
  std::vector<Real> weighted(n);
  for (size_t i = 0; i < n; ++i) { weighted[i] = b[i] * std::exp(-A[i]); }
  auto const Ib = cumulative_trapezoid(t, weighted);

  BoundReport r;
  r.name = "gronwall";
  r.samples = static_cast<long>(n);
  Real worst = -inf;
  for (size_t i = 0; i < n; ++i) {
    Real const bound = std::exp(A[i]) * (y[0] + Ib[i]);
    Real const ratio = bound != 0 ? y[i] / bound : (y[i] == 0 ? 1 : inf);
    if (y[i] > bound + 1e-8 * std::abs(bound) + 1e-300) { ++r.violations; }
    if (ratio > worst) {
      worst = ratio;
      r.t_worst = t[i];
      r.bound = bound;
      r.measured = y[i];
    }
  }
  r.margin = r.bound - r.measured;
  r.inputs = {{"max_ratio", worst}};
  r.min_constant = worst;
  if (!uniform) { r.warnings.push_back("nonuniform time grid: trapezoid rule applied on the given samples"); }

  long bad = 0;
  for (size_t i = 1; i + 1 < n; ++i) {
    Real const dy = centered(t, y, i);
    Real const rhs = a[i] * y[i] + b[i];
    if (dy > rhs + 1e-6 * (std::abs(dy) + std::abs(rhs))) { ++bad; }
  }
  if (bad) { r.warnings.push_back("y' <= a y + b fails at " + std::to_string(bad) + " interior samples"); }
  return r;
}

std::pair<BoundReport, BoundReport> diff_ineq_monitor(Trajectory const &traj, TrajectoryParams const &p, Real C)
{
  require_increasing(traj);
  auto const t = column(traj, [](auto const &r) { return r.t; });
  auto const Dh = column(traj, [](auto const &r) { return r.Dh; });
  auto const V2 = column(traj, [](auto const &r) { return r.V2; });
  Real const F2 = p.F * p.F;

  std::vector<Real> ti, lh, rh, lv, rv;
  for (size_t n = 1; n + 1 < traj.size(); ++n) {
    auto const &r = traj[n];
    Real const c4 = std::pow(r.crit, 4);
    ti.push_back(r.t);
    lh.push_back(centered(t, Dh, n) + p.nu * r.dh_grad2);
    rh.push_back(F2 + r.E * r.D + (std::pow(r.E, 0.25) * r.D + c4 + r.E * r.dz_u2 * c4) * r.Dh);
    lv.push_back(centered(t, V2, n) + p.nu * r.Au2);
    rv.push_back(F2 + std::pow(r.Dh, 4.0 / 3.0) * std::pow(r.dz_u2, 2.0 / 3.0) * r.V2);
  }
  std::vector<Real> const zero(ti.size(), 0.0);
  std::pair<BoundReport, BoundReport> out{linear_check("horizontal_gradient_inequality", ti, lh, zero, rh, C, 1e-12),
                                          linear_check("v_norm_inequality", ti, lv, zero, rv, C, 1e-12)};
  out.first.inputs = {{"nu", p.nu}, {"F", p.F}};
  out.second.inputs = out.first.inputs;
  if (derivative_noise(Dh) > 0.5) { out.first.warnings.push_back("output cadence too coarse: derivative noise"); }
  if (derivative_noise(V2) > 0.5) { out.second.warnings.push_back("output cadence too coarse: derivative noise"); }
  return out;
}

namespace {

struct RunningBounds
{
  std::vector<Real> t, lhs2, lhsk;
  Real sup_crit = 0;
};

RunningBounds running(Trajectory const &traj, TrajectoryParams const &p)
{
  RunningBounds rb;
  rb.t = column(traj, [](auto const &r) { return r.t; });
  auto const i2 = cumulative_trapezoid(rb.t, column(traj, [](auto const &r) { return r.dh_grad2; }));
  auto const ik = cumulative_trapezoid(rb.t, column(traj, [](auto const &r) { return r.Au2; }));
  for (size_t n = 0; n < traj.size(); ++n) {
    rb.lhs2.push_back(traj[n].Dh + p.nu * i2[n]);
    rb.lhsk.push_back(traj[n].V2 + p.nu * ik[n]);
    rb.sup_crit = std::max(rb.sup_crit, traj[n].crit);
  }
  return rb;
}

BoundReport constant_bound(std::string name, std::vector<Real> const &t, std::vector<Real> const &lhs, Real bound)
{
  BoundReport r;
  r.name = std::move(name);
  r.samples = static_cast<long>(t.size());
  r.bound = bound;
  for (size_t n = 0; n < t.size(); ++n) {
    if (lhs[n] > bound * (1 + 1e-12)) { ++r.violations; }
    if (n == 0 || lhs[n] > r.measured) {
      r.measured = lhs[n];
      r.t_worst = t[n];
    }
  }
  r.margin = bound - r.measured;
  return r;
}

} // namespace

std::pair<BoundReport, BoundReport> k2_k_check(Trajectory const &traj, TrajectoryParams const &p, Real C)
{
  require_increasing(traj);
  RunningBounds const rb = running(traj, p);
  Real const K1 = bound_k1(p.F, p.L, p.nu, p.T, std::sqrt(p.u0_l2sq), C);
  Real const u0h1 = std::sqrt(p.u0_h1sq);
  Real const K2 = bound_k2(K1, p.T, rb.sup_crit, u0h1, p.F, C);
  Real const K = bound_k_final(K1, K2, u0h1, p.F, C);
  std::pair<BoundReport, BoundReport> out{constant_bound("K2", rb.t, rb.lhs2, K2), constant_bound("K", rb.t, rb.lhsk, K)};
  for (auto *r : {&out.first, &out.second}) {
    r->constant = C;
    r->inputs = {{"K1", K1}, {"T", p.T}, {"sup_crit", rb.sup_crit}, {"u0_h1", u0h1}, {"F", p.F}};
    if (std::isinf(r->bound)) { r->warnings.push_back("bound saturated to +inf"); }
  }
  out.second.inputs["K2"] = K2;

  // Both bounds grow with C, so the smallest admissible constant is found by bisection in log space.
  auto holds = [&](Real c) {
    Real const k1 = bound_k1(p.F, p.L, p.nu, p.T, std::sqrt(p.u0_l2sq), c);
    Real const k2 = bound_k2(k1, p.T, rb.sup_crit, u0h1, p.F, c);
    Real const k = bound_k_final(k1, k2, u0h1, p.F, c);
    return std::pair{constant_bound("", rb.t, rb.lhs2, k2).violations == 0,
                     constant_bound("", rb.t, rb.lhsk, k).violations == 0};
  };
  for (int which = 0; which < 2; ++which) {
    auto ok = [&](Real c) { auto const h = holds(c); return which == 0 ? h.first : h.second; };
    BoundReport &r = which == 0 ? out.first : out.second;
    Real lo = -30, hi = 10;
    if (ok(std::exp(lo))) {
      r.min_constant = 0;
    } else if (!ok(std::exp(hi))) {
      r.min_constant = inf;
    } else {
      for (int it = 0; it < 60; ++it) {
        Real const mid = 0.5 * (lo + hi);
        (ok(std::exp(mid)) ? hi : lo) = mid;
      }
      r.min_constant = std::exp(hi);
    }
  }
  return out;
}

TrajectoryConstants calibrate_trajectory(Trajectory const &traj, TrajectoryParams const &p, Real safety)
{
  if (traj.size() < 3) { throw std::invalid_argument("calibrate_trajectory: need at least three samples"); }
  auto pick = [&](Real m) {
    if (!std::isfinite(m)) { throw std::runtime_error("calibrate_trajectory: no finite constant fits the trajectory"); }
    return m > 0 ? safety * m : 1e-12;
  };
  TrajectoryConstants c;
  c.k1 = pick(k1_check(traj, p, 1).min_constant);
  auto const [l2, l22] = decay_bound_check(traj, p, 1);
  c.l2 = pick(l2.min_constant);
  c.l22 = pick(l22.min_constant);
  auto const [dh, v] = diff_ineq_monitor(traj, p, 1);
  c.dh = pick(dh.min_constant);
  c.v = pick(v.min_constant);
  auto const [k2, k] = k2_k_check(traj, p, 1);
  c.k2 = pick(std::max(k2.min_constant, k.min_constant));
  return c;
}

std::vector<BoundReport> trajectory_reports(Trajectory const &traj, TrajectoryParams const &p,
                                            TrajectoryConstants const &c)
{
  std::vector<BoundReport> out;
  out.push_back(k1_check(traj, p, c.k1));
  out.push_back(decay_bound_check(traj, p, c.l2).first);
  out.push_back(decay_bound_check(traj, p, c.l22).second);
  out.push_back(diff_ineq_monitor(traj, p, c.dh).first);
  out.push_back(diff_ineq_monitor(traj, p, c.v).second);
  auto const [k2, k] = k2_k_check(traj, p, c.k2);
  out.push_back(k2);
  out.push_back(k);
  return out;
}

} // namespace chanreg
