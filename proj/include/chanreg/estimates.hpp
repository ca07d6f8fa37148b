#pragma once

#include <map>
#include <string>
#include <vector>

#include "chanreg/diagnostics.hpp"
#include "chanreg/solver.hpp"

namespace chanreg {

// ||grad u3~|| with u3~ the baroclinic part of u3, evaluated in physical space.
Real criterion_diag(VectorField const &u);

// Largest sampled ||f(t)||. A lower bound for the essential supremum.
Real forcing_sup(std::vector<VectorField> const &samples);
Real forcing_sup(Forcing const &f, std::vector<Real> const &times);

Real bound_k1(Real F, Real L, Real nu, Real T, Real u0_l2, Real C);

// Double exponentials evaluated as exp(a) * b with a, b >= 0 computed separately;
// results beyond the double range saturate to +inf.
Real bound_k2(Real K1, Real T, Real sup_crit, Real u0_h1, Real F, Real C);
Real bound_k_final(Real K1, Real K2, Real u0_h1, Real F, Real C);

struct BoundReport
{
  std::string name;
  std::map<std::string, Real> inputs;
  Real bound = 0;
  Real measured = 0;
  Real margin = 0;
  Real constant = 1;
  // Trajectory checks: worst sample, sample count and violations at `constant`.
  Real t_worst = 0;
  long samples = 0;
  long violations = 0;
  // Smallest constant that makes the check hold on every sample (0 if any works,
  // +inf if none does).
  Real min_constant = 0;
  std::vector<std::string> warnings;

  bool holds() const { return violations == 0 && margin >= 0; }
  Real violation_fraction() const { return samples ? static_cast<Real>(violations) / static_cast<Real>(samples) : 0; }
};

struct EnergyBudget
{
  std::vector<Real> residual; // r(t_n, t_0) from the recorded samples
  Real max_abs = 0;
  Real quadrature_error = 0;  // trapezoid error estimate from second differences
  std::vector<std::string> warnings;
};

EnergyBudget energy_budget(Trajectory const &traj, Real nu, Real tolerance = 1e-6);

// Problem data the trajectory checks need.
struct TrajectoryParams
{
  Real nu = 1;
  Real L = 1;
  Real F = 0;
  Real T = 1;
  Real u0_l2sq = 0; // ||u0||^2
  Real u0_h1sq = 0; // ||u0||_{H^1}^2
};

TrajectoryParams trajectory_params(SimState const &initial, SolverConfig const &cfg);

// E(t) <= C L^4 F^2 / nu^2 + exp(-nu t / L^2) E0 and nu int_0^t D <= C L^2 F^2 t / nu + E0.
std::pair<BoundReport, BoundReport> decay_bound_check(Trajectory const &traj, TrajectoryParams const &p, Real C);

// E(t) + nu int_0^t D <= K1.
BoundReport k1_check(Trajectory const &traj, TrajectoryParams const &p, Real C);

// y(t) <= exp(int_0^t a) (y(0) + int_0^t b exp(-int_0^s a) ds) with trapezoidal integrals.
BoundReport gronwall_check(std::vector<Real> const &t, std::vector<Real> const &y, std::vector<Real> const &a,
                           std::vector<Real> const &b);

// The two differential inequalities feeding K2 and K, checked with centered differences
// at interior samples. first: horizontal-gradient inequality, second: V-norm inequality.
std::pair<BoundReport, BoundReport> diff_ineq_monitor(Trajectory const &traj, TrajectoryParams const &p, Real C);

// Running bounds on ||grad_h u||^2 + nu int ||grad_h grad u||^2 <= K2 and
// ||u||_V^2 + nu int ||A u||^2 <= K.
std::pair<BoundReport, BoundReport> k2_k_check(Trajectory const &traj, TrajectoryParams const &p, Real C);

struct TrajectoryConstants
{
  Real k1 = 1;
  Real l2 = 1;
  Real l22 = 1;
  Real dh = 1;
  Real v = 1;
  Real k2 = 1;
};

// Empirical minimal constants on a calibration trajectory, times the safety factor.
TrajectoryConstants calibrate_trajectory(Trajectory const &traj, TrajectoryParams const &p, Real safety = 1.1);

// Every trajectory report at the given constants.
std::vector<BoundReport> trajectory_reports(Trajectory const &traj, TrajectoryParams const &p,
                                            TrajectoryConstants const &c);

} // namespace chanreg
