#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "chanreg/decomposition.hpp"
#include "chanreg/estimates.hpp"

using namespace chanreg;

namespace {

GridPtr box(Index nx, Index ny, Index nz) { return make_grid(nx, ny, nz, 2 * pi, 2 * pi, 1.0); }

Real const inf = std::numeric_limits<Real>::infinity();

VectorField perturbed_shear(GridPtr const &g, Real eps, std::uint64_t seed)
{
  RandomSpec spec;
  spec.seed = seed;
  spec.horizontal_cap = 2;
  spec.vertical_cap = 8;
  spec.flags = {true, true};
  VectorField p = random_vector_field(g, spec);
  return exact_shear_solution(g, 1, 1.0, 0, 1.0) + (eps / norm_lq(p, 2)) * p;
}

Real scalar_grad_norm(ScalarField const &f)
{
  Real s = 0;
  for (int a = 1; a <= 3; ++a) { s += std::pow(norm_lq(diff(f, a), 2), 2); }
  return std::sqrt(s);
}

// Exact decaying shear mode sampled as a trajectory: E = E0 exp(-2 nu lam t), D = V2 = lam E.
Trajectory shear_trajectory(Real E0, Real lam, Real nu, Real dt, int n)
{
  Trajectory tr;
  for (int i = 0; i <= n; ++i) {
    DiagnosticsRecord r;
    r.t = i * dt;
    r.E = E0 * std::exp(-2 * nu * lam * r.t);
    r.D = r.V2 = lam * r.E;
    r.Au2 = lam * lam * r.E;
    r.dz_u2 = r.D;
    r.cumD = E0 * (1 - std::exp(-2 * nu * lam * r.t)) / (2 * nu);
    tr.push_back(r);
  }
  return tr;
}

} // namespace

TEST_CASE("criterion_diag examples")
{
  auto const g = box(16, 16, 33);
  VectorField u(g);
  CHECK(criterion_diag(u) == 0.0);

  u[2] = ScalarField::sample(g, [](double x, double, double z) { return std::sin(x) * std::sin(pi * z); });
  // |d1|^2 integrates to 2 pi^2, |d3|^2 to 2 pi^4.
  Real const expect = std::sqrt(2 * pi * pi + 2 * std::pow(pi, 4));
  CHECK(std::abs(criterion_diag(u) - expect) < 1e-8 * expect);

  u[2] = ScalarField::sample(g, [](double x, double y, double) { return std::sin(x) + std::cos(2 * y); });
  CHECK(criterion_diag(u) < 1e-12);
}

TEST_CASE("criterion_diag is bounded by the split norms")
{
  auto const g = box(16, 16, 17);
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    RandomSpec spec;
    spec.seed = seed;
    spec.flags = {true, true};
    VectorField const u = random_vector_field(g, spec);
    Real const c = criterion_diag(u);
    Real const full = scalar_grad_norm(u[2]);
    Real const mean = scalar_grad_norm(vertical_average(u[2]).volume());
    CHECK(c <= (full + mean) * (1 + 1e-12));
    CHECK(c > 0);
  }
}

TEST_CASE("forcing_sup examples")
{
  auto const g = box(8, 8, 9);
  CHECK_THROWS_AS(forcing_sup(std::vector<VectorField>{}), std::invalid_argument);
  CHECK(forcing_sup(std::vector<VectorField>{VectorField(g)}) == 0.0);

  VectorField const f = shear_forcing(g, 1, 2.0, 1.0);
  Real const nf = norm_lq(f, 2);
  CHECK(std::abs(forcing_sup(std::vector<VectorField>{f, f}) - nf) < 1e-14 * nf);

  std::vector<VectorField> samples;
  Real expect = 0;
  for (Real t : {0.1, 0.7, 1.3, 2.2}) {
    samples.push_back(std::sin(t) * f);
    expect = std::max(expect, std::abs(std::sin(t)) * nf);
  }
  CHECK(std::abs(forcing_sup(samples) - expect) < 1e-13 * expect);

  Forcing const periodic(f, 0.5, 2.0);
  std::vector<Real> times;
  for (int i = 0; i <= 1000; ++i) { times.push_back(i * pi / 1000); }
  CHECK(std::abs(forcing_sup(periodic, times) - 1.5 * nf) < 1e-6 * nf);
  CHECK(forcing_sup(Forcing{}, times) == 0.0);
}

TEST_CASE("K1 formula")
{
  for (Real C : {0.5, 1.0, 7.0}) { CHECK(bound_k1(0, 1, 1, 1, std::sqrt(3.0), C) == doctest::Approx(6).epsilon(1e-15)); }
  CHECK(bound_k1(1, 1, 1, 2, 0, 1) == 3.0);
  CHECK(bound_k1(2, 0.5, 0.1, 3, 1, 2) == doctest::Approx(2 * 4 * (0.0625 + 0.3) / 0.01 + 2).epsilon(1e-14));
  CHECK_THROWS_AS(bound_k1(1, 1, -1, 1, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(bound_k1(1, 0, 1, 1, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(bound_k1(1, 1, 1, 1, 1, 0), std::invalid_argument);
}

TEST_CASE("K2 and K formulas")
{
  CHECK(std::abs(bound_k2(5, 2, 0, 1.5, 0.5, 0) - (2.25 + 0.25)) < 1e-15);
  CHECK(std::abs(bound_k2(1, 1, 0, 1, 0, 1) - 2 * std::exp(1.0)) < 1e-12 * 2 * std::exp(1.0));
  // C = 2, K1 = 1.5, T = 0.5, crit = 1.2: exponent 2 * 2.25 + 2 * 2.75 * 1.2^4.
  Real const e = 4.5 + 5.5 * std::pow(1.2, 4);
  Real const expect = std::exp(e) * (0.64 + 0.09 + 4.5);
  CHECK(std::abs(bound_k2(1.5, 0.5, 1.2, 0.8, 0.3, 2) - expect) < 1e-12 * expect);
  CHECK(bound_k2(1e3, 1, 10, 1, 1, 1) == inf);
  CHECK(bound_k2(1e200, 1e200, 1e200, 1, 1, 1) == inf);

  CHECK(bound_k_final(1, 0, 1.5, 0.5, 3) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(bound_k_final(0, 4, 1.5, 0.5, 3) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(std::abs(bound_k_final(1, 1, 1, 0, 1) - std::exp(1.0)) < 1e-12 * std::exp(1.0));
  CHECK(bound_k_final(1e10, 1e10, 1, 1, 1) == inf);
}

TEST_CASE("K2 and K are nondecreasing in every argument")
{
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<Real> U(0, 2);
  for (int s = 0; s < 500; ++s) {
    std::array<Real, 6> a{U(rng), U(rng), U(rng), U(rng), U(rng), U(rng)};
    auto k2 = [](std::array<Real, 6> const &v) { return bound_k2(v[0], v[1], v[2], v[3], v[4], v[5]); };
    auto kf = [](std::array<Real, 6> const &v) { return bound_k_final(v[0], v[1], v[2], v[3], v[4]); };
    for (size_t i = 0; i < 6; ++i) {
      auto b = a;
      b[i] += U(rng);
      CHECK(k2(b) >= k2(a));
      if (i < 5) { CHECK(kf(b) >= kf(a)); }
    }
  }
}

TEST_CASE("energy budget")
{
  Real const lam = pi * pi / 4;
  Trajectory const tr = shear_trajectory(3.0, lam, 1.0, 1e-4, 1000);
  EnergyBudget const b = energy_budget(tr, 1.0);
  CHECK(b.max_abs < 1e-6);
  CHECK(b.warnings.empty());

  Trajectory zero(5);
  for (int i = 0; i < 5; ++i) { zero[static_cast<size_t>(i)].t = i; }
  CHECK(energy_budget(zero, 1.0).max_abs == 0.0);

  EnergyBudget const coarse = energy_budget(shear_trajectory(3.0, lam, 1.0, 0.1, 10), 1.0);
  CHECK_FALSE(coarse.warnings.empty());
  CHECK(coarse.quadrature_error > 1e-6);

  Trajectory bad = tr;
  bad[3].t = bad[2].t;
  CHECK_THROWS_AS(energy_budget(bad, 1.0), std::invalid_argument);
}

TEST_CASE("energy budget of a simulated shear decay")
{
  auto const g = box(8, 8, 33);
  SolverConfig cfg;
  cfg.dt = 1e-4;
  cfg.t_end = 0.1;
  RunResult const r = run(SimState{exact_shear_solution(g, 1, 1.0, 0, 1.0)}, cfg);
  EnergyBudget const b = energy_budget(r.records, 1.0);
  CHECK(b.max_abs < 1e-6);
  for (size_t n = 1; n < r.records.size(); ++n) { CHECK(r.records[n].E <= r.records[n - 1].E); }
}

TEST_CASE("decay bounds")
{
  Real const lam = pi * pi / 4;
  TrajectoryParams p;
  Trajectory const tr = shear_trajectory(2.0, lam, 1.0, 1e-3, 500);
  auto const [e, d] = decay_bound_check(tr, p, 1.0);
  CHECK(e.violations == 0);
  CHECK(d.violations == 0);
  CHECK(e.min_constant == 0.0);
  CHECK(e.holds());

  Trajectory const z = shear_trajectory(0.0, lam, 1.0, 1e-3, 10);
  auto const [ez, dz] = decay_bound_check(z, p, 1.0);
  CHECK(ez.violations == 0);
  CHECK(ez.measured == 0.0);
  CHECK(ez.bound == 0.0);

  // Decay slower than exp(-nu t / L^2) with no forcing cannot be covered by any constant.
  Trajectory slow = shear_trajectory(2.0, 0.1, 1.0, 1e-2, 100);
  auto const [es, ds] = decay_bound_check(slow, p, 1.0);
  CHECK(es.violations > 0);
  CHECK(es.min_constant == inf);
  CHECK_FALSE(es.holds());

  // With forcing the minimal constant closes the gap exactly.
  p.F = 1;
  auto const [ef, df] = decay_bound_check(slow, p, 1.0);
  REQUIRE(std::isfinite(ef.min_constant));
  CHECK(decay_bound_check(slow, p, ef.min_constant * (1 + 1e-9)).first.violations == 0);
  CHECK(decay_bound_check(slow, p, ef.min_constant * 0.99).first.violations > 0);
}

TEST_CASE("K1 along a shear decay")
{
  Trajectory const tr = shear_trajectory(2.0, pi * pi / 4, 1.0, 1e-3, 500);
  TrajectoryParams p;
  p.T = 0.5;
  BoundReport const r = k1_check(tr, p, 1.0);
  CHECK(r.violations == 0);
  CHECK(r.bound == doctest::Approx(4.0));
  CHECK(r.margin > 0);
}

TEST_CASE("gronwall checker saturating cases")
{
  std::vector<Real> t, y, a, b;
  for (int i = 0; i <= 2000; ++i) {
    t.push_back(i * 1e-3);
    y.push_back(std::exp(t.back()));
    a.push_back(1);
    b.push_back(0);
  }
  BoundReport r = gronwall_check(t, y, a, b);
  CHECK(std::abs(r.inputs.at("max_ratio") - 1) < 1e-8);
  CHECK(r.violations == 0);

  t.clear(), y.clear(), a.clear(), b.clear();
  for (int i = 0; i <= 10000; ++i) {
    t.push_back(i * 2e-4);
    y.push_back(1 - std::exp(-t.back()));
    a.push_back(-1);
    b.push_back(1);
  }
  r = gronwall_check(t, y, a, b);
  CHECK(std::abs(r.inputs.at("max_ratio") - 1) < 1e-8);
  CHECK(r.violations == 0);
  CHECK(r.warnings.empty());

  std::vector<Real> const c(t.size(), 3.0), zero(t.size(), 0.0);
  r = gronwall_check(t, c, zero, zero);
  CHECK(r.inputs.at("max_ratio") == 1.0);

  // A series growing faster than the hypothesis allows is reported.
  std::vector<Real> fast;
  for (Real s : t) { fast.push_back(std::exp(2 * s)); }
  std::vector<Real> const one(t.size(), 1.0);
  r = gronwall_check(t, fast, one, zero);
  CHECK(r.violations > 0);
  CHECK_FALSE(r.warnings.empty());

  std::vector<Real> const tn{0, 0.1, 0.3, 0.4};
  r = gronwall_check(tn, {1, 1, 1, 1}, {0, 0, 0, 0}, {0, 0, 0, 0});
  CHECK_FALSE(r.warnings.empty());
  CHECK_THROWS_AS(gronwall_check({0, 1}, {1}, {0, 0}, {0, 0}), std::invalid_argument);
}

TEST_CASE("differential inequality monitor")
{
  TrajectoryParams p;
  Trajectory const tr = shear_trajectory(2.0, pi * pi / 4, 1.0, 1e-3, 200);
  auto const [h, v] = diff_ineq_monitor(tr, p, 1.0);
  CHECK(h.samples == 199);
  CHECK(h.violations == 0);
  CHECK(h.min_constant == 0.0);
  // dV2/dt + nu |Au|^2 = -2 lam^2 E + lam^2 E < 0.
  CHECK(v.violations == 0);

  Trajectory zero(6);
  for (int i = 0; i < 6; ++i) { zero[static_cast<size_t>(i)].t = i; }
  auto const [hz, vz] = diff_ineq_monitor(zero, p, 1.0);
  CHECK(hz.violations == 0);
  CHECK(vz.violations == 0);
}

TEST_CASE("unforced decay is at least as fast as the Poincare rate")
{
  auto const g = box(12, 12, 17);
  SolverConfig cfg;
  cfg.dt = 2e-3;
  cfg.t_end = 0.2;
  RunResult const r = run(SimState{perturbed_shear(g, 1.0, 4)}, cfg);
  Real const rate = 2 * (pi * pi / 4);
  for (size_t n = 1; n + 1 < r.records.size(); ++n) {
    Real const dE = (r.records[n + 1].E - r.records[n - 1].E) / (r.records[n + 1].t - r.records[n - 1].t);
    CHECK(-dE / r.records[n].E >= 0.99 * rate);
  }
}

TEST_CASE("calibrated constants hold on a held-out forced run")
{
  auto const g = box(12, 12, 17);
  auto const f = std::make_shared<Forcing>(shear_forcing(g, 1, 1.0, 0.5), 0.3, 4.0);
  SolverConfig cfg;
  cfg.dt = 5e-3;
  cfg.t_end = 0.5;
  auto simulate = [&](std::uint64_t seed) {
    SimState s{perturbed_shear(g, 0.6, seed), 0, 0.5, f};
    return std::pair{run(s, cfg).records, trajectory_params(s, cfg)};
  };
  auto const [train, pa] = simulate(21);
  auto const [test, pb] = simulate(22);
  CHECK(pa.F == doctest::Approx(1.3 * norm_lq(*f->profile(), 2)).epsilon(1e-4));
  TrajectoryConstants const c = calibrate_trajectory(train, pa);
  for (auto const &r : trajectory_reports(train, pa, c)) {
    INFO(r.name);
    CHECK(r.violations == 0);
  }
  for (auto const &r : trajectory_reports(test, pb, c)) {
    INFO(r.name << " min constant " << r.min_constant << " used " << r.constant);
    CHECK(r.violation_fraction() <= 0.01);
  }
}
