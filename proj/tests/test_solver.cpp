#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "chanreg/decomposition.hpp"
#include "chanreg/solver.hpp"

using namespace chanreg;

namespace {

GridPtr box(Index nx, Index ny, Index nz) { return make_grid(nx, ny, nz, 2 * pi, 2 * pi, 1.0); }

VectorField perturbed_shear(GridPtr const &g, Real eps, std::uint64_t seed)
{
  RandomSpec spec;
  spec.seed = seed;
  spec.horizontal_cap = 2;
  spec.vertical_cap = 8;
  spec.flags = {true, true};
  VectorField p = random_vector_field(g, spec);
  VectorField u = exact_shear_solution(g, 1, 1.0, 0, 1.0) + (eps / norm_lq(p, 2)) * p;
  return u;
}

Real rel_l2(VectorField const &a, VectorField const &b) { return norm_lq(a - b, 2) / norm_lq(b, 2); }

} // namespace

TEST_CASE("exact shear solution")
{
  auto const g = box(8, 8, 33);
  VectorField const u0 = exact_shear_solution(g, 1, 2.0, 0, 1.0);
  auto const expect = ScalarField::sample(g, [](double, double, double z) { return 2 * std::cos(pi * z / 2); });
  CHECK((u0[0].values() - expect.values()).abs().maxCoeff() < 1e-15);
  for (int k = 1; k <= 4; ++k) {
    VectorField const u = exact_shear_solution(g, k, 1.0, 0.3, 0.5);
    CHECK(max_divergence(u) == 0.0);
    CHECK(max_wall_value(u) == 0.0);
    // du/dt + nu A u = 0 by quadrature.
    Real const lam = shear_eigenvalue(*g, k);
    VectorField const res = (-0.5 * lam) * u + 0.5 * stokes_apply(u);
    CHECK(norm_lq(res, 2) < 1e-8);
  }
  CHECK_THROWS_AS(exact_shear_solution(g, 0, 1.0, 0, 1.0), std::invalid_argument);
}

TEST_CASE("decaying shear mode is reproduced")
{
  auto const g = box(8, 8, 33);
  SimState s{exact_shear_solution(g, 1, 1.0, 0, 1.0)};
  SolverConfig cfg;
  cfg.dt = 1e-4;
  cfg.t_end = 0.1;
  cfg.output_every = 100;
  RunResult const r = run(s, cfg);
  REQUIRE_FALSE(r.aborted);
  CHECK(std::abs(r.final_state.t - 0.1) < 1e-12);
  CHECK(r.final_state.steps == 1000);
  VectorField const exact = exact_shear_solution(g, 1, 1.0, 0.1, 1.0);
  CHECK(rel_l2(r.final_state.u, exact) < 1e-6);
  for (auto const &d : r.records) {
    CHECK(d.crit < 1e-10);
    CHECK(std::abs(d.resid) < 1e-6);
    CHECK(std::abs(d.V2 - d.D) < 1e-8 * d.D);
  }
}

TEST_CASE("zero stays zero")
{
  auto const g = box(8, 8, 17);
  VectorField u(g);
  u.divergence_free = u.no_slip = true;
  SolverConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 0.1;
  RunResult const r = run(SimState{u}, cfg);
  CHECK(norm_lq(r.final_state.u, 2) == 0.0);
  for (auto const &d : r.records) { CHECK(d.resid == 0.0); }
}

TEST_CASE("convergence order under dt halving")
{
  auto const g = box(12, 12, 17);
  VectorField const u0 = perturbed_shear(g, 0.5, 3);
  auto differences = [&](int order) {
    std::vector<VectorField> sol;
    for (Real dt : {0.005, 0.0025, 0.00125}) {
      SolverConfig cfg;
      cfg.dt = dt;
      cfg.t_end = 0.4;
      cfg.order = order;
      cfg.output_every = 100000;
      sol.push_back(run(SimState{u0}, cfg).final_state.u);
    }
    return std::pair{norm_lq(sol[0] - sol[1], 2), norm_lq(sol[1] - sol[2], 2)};
  };
  auto const [a2, b2] = differences(2);
  MESSAGE("second order ratio " << a2 / b2);
  CHECK(a2 / b2 > 3.5);
  CHECK(a2 / b2 < 4.5);
  auto const [a1, b1] = differences(1);
  MESSAGE("first order ratio " << a1 / b1);
  CHECK(a1 / b1 > 1.7);
  CHECK(a1 / b1 < 2.3);
}

TEST_CASE("unforced runs lose energy and keep the constraints")
{
  auto const g = box(16, 16, 25);
  SimState s{perturbed_shear(g, 0.8, 11)};
  SolverConfig cfg;
  cfg.dt = 2e-3;
  cfg.t_end = 0.1;
  Integrator it(s, cfg);
  Real prev = it.diagnostics().E;
  while (it.state().t < cfg.t_end - 1e-12) {
    it.step();
    VectorField const &u = it.state().u;
    CHECK(max_divergence(u) < 1e-8);
    CHECK(max_wall_value(u) < 1e-10);
    CHECK(std::abs(integrate(*g, u[2].values())) < 1e-10);
    Index const ps = g->plane_size();
    CHECK(std::abs(vertical_average(u[2]).plane().values().mean()) < 1e-12);
    CHECK(u[2].values().head(ps).abs().maxCoeff() == 0.0);
    CHECK(u[2].values().tail(ps).abs().maxCoeff() == 0.0);
    Real const E = it.diagnostics().E;
    CHECK(E <= prev * (1 + 1e-9));
    prev = E;
  }
}

TEST_CASE("nonlinear term injects no energy along a trajectory")
{
  auto const g = box(16, 16, 25);
  SimState s{perturbed_shear(g, 1.0, 5)};
  SolverConfig cfg;
  cfg.dt = 5e-3;
  cfg.t_end = 0.05;
  RunResult const r = run(s, cfg, [&](DiagnosticsRecord const &, SimState const &st) {
    VectorField const &u = st.u;
    Real const bu = inner_l2(bilinear_b(u, u), u);
    CHECK(std::abs(bu) < 1e-8 * norm_lq(u, 2) * std::pow(v_norm(u), 2));
  });
  CHECK_FALSE(r.aborted);
}

TEST_CASE("discrete energy law holds to second order")
{
  auto const g = box(12, 12, 17);
  VectorField const u0 = perturbed_shear(g, 0.8, 8);
  auto worst = [&](Real dt) {
    SolverConfig cfg;
    cfg.dt = dt;
    cfg.t_end = 0.1;
    RunResult const r = run(SimState{u0}, cfg);
    Real m = 0;
    for (auto const &d : r.records) { m = std::max(m, std::abs(d.resid)); }
    return m;
  };
  Real const a = worst(0.01), b = worst(0.005);
  MESSAGE("energy residual " << a << " -> " << b);
  CHECK(a / b > 3.0);
}

TEST_CASE("resolution study on a perturbed shear flow")
{
  RandomSpec spec;
  auto const coarse = box(16, 16, 25), fine = box(24, 24, 33);
  SolverConfig cfg;
  cfg.dt = 5e-3;
  cfg.t_end = 0.1;
  cfg.output_every = 5;
  RunResult const a = run(SimState{perturbed_shear(coarse, 0.5, 2)}, cfg);
  RunResult const b = run(SimState{perturbed_shear(fine, 0.5, 2)}, cfg);
  REQUIRE(a.records.size() == b.records.size());
  for (size_t n = 0; n < a.records.size(); ++n) {
    CHECK(std::abs(a.records[n].E - b.records[n].E) < 1e-4 * b.records[n].E);
    CHECK(std::abs(a.records[n].D - b.records[n].D) < 1e-4 * b.records[n].D);
    CHECK(std::abs(a.records[n].crit - b.records[n].crit) < 1e-4 * std::max(1.0, b.records[n].crit));
  }
}

TEST_CASE("forcing holds the shear mode steady")
{
  auto const g = box(8, 8, 33);
  auto const f = std::make_shared<Forcing>(shear_forcing(g, 1, 1.0, 0.5));
  SimState s{exact_shear_solution(g, 1, 1.0, 0, 0.5), 0, 0.5, f};
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 0.2;
  RunResult const r = run(s, cfg);
  CHECK(rel_l2(r.final_state.u, exact_shear_solution(g, 1, 1.0, 0, 0.5)) < 1e-8);
  for (auto const &d : r.records) {
    CHECK(std::abs(d.resid) < 1e-8 * d.E);
    CHECK(d.f_norm > 0);
  }
}

TEST_CASE("step errors and configuration checks")
{
  auto const g = box(8, 8, 17);
  SimState s{exact_shear_solution(g, 1, 50.0, 0, 1.0)};
  SolverConfig cfg;
  cfg.dt = 0.1;
  cfg.t_end = 1;
  CHECK_THROWS_AS(step(s, cfg), NumericalAbort);

  cfg.adaptive = true;
  Integrator it(s, cfg);
  it.step();
  CHECK(it.dt() < 0.1);
  CHECK(it.cfl() <= cfg.cfl_safety);

  RunResult const r = run(s, [] {
    SolverConfig c;
    c.dt = 0.1;
    c.t_end = 1;
    return c;
  }());
  CHECK(r.aborted);
  CHECK(r.records.size() == 1);
  CHECK(r.final_state.t == 0.0);

  SolverConfig bad;
  bad.dt = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = SolverConfig{};
  bad.order = 3;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  VectorField loose = exact_shear_solution(g, 1, 1.0, 0, 1.0);
  loose.no_slip = false;
  CHECK_THROWS_AS(Integrator(SimState{loose}, SolverConfig{}), SpaceViolation);

  VectorField nan = exact_shear_solution(g, 1, 1.0, 0, 1.0);
  nan[0].mutable_values()(g->index(1, 1, 5)) = std::numeric_limits<Real>::quiet_NaN();
  SolverConfig small;
  small.dt = 1e-3;
  CHECK_THROWS_AS(step(SimState{nan}, small), NumericalAbort);
}

TEST_CASE("steps are deterministic")
{
  auto const g = box(12, 12, 17);
  SimState s{perturbed_shear(g, 0.5, 9)};
  SolverConfig cfg;
  cfg.dt = 5e-3;
  cfg.t_end = 0.03;
  RunResult const a = run(s, cfg), b = run(s, cfg);
  for (int c = 0; c < 3; ++c) { CHECK((a.final_state.u[c].values() == b.final_state.u[c].values()).all()); }
}
