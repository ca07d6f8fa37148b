#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "chanreg/diagnostics.hpp"
#include "chanreg/stokes.hpp"

namespace chanreg {

// f(t) = (1 + amplitude * sin(omega t)) g, or zero when g is absent.
class Forcing
{
public:
  Forcing() = default;
  Forcing(VectorField g, Real amplitude = 0, Real omega = 0);

  bool is_zero() const { return !g_; }
  Real factor(Real t) const { return 1 + amplitude_ * std::sin(omega_ * t); }
  VectorField value(Real t) const;
  Real norm(Real t) const { return g_ ? std::abs(factor(t)) * g_norm_ : 0; }
  VectorField const *profile() const { return g_ ? &*g_ : nullptr; }
  Real amplitude() const { return amplitude_; }
  Real omega() const { return omega_; }

private:
  std::optional<VectorField> g_;
  Real amplitude_ = 0, omega_ = 0, g_norm_ = 0;
};

// Body force that holds the k-th shear eigenmode of amplitude `amplitude` steady.
VectorField shear_forcing(GridPtr const &grid, int k, Real amplitude, Real nu);

struct SimState
{
  VectorField u;
  Real t = 0;
  Real nu = 1;
  std::shared_ptr<Forcing const> forcing = std::make_shared<Forcing>();
  long steps = 0;
};

struct SolverConfig
{
  Real dt = 1e-3;
  Real t_end = 1;
  int order = 2;          // 1: Euler for the explicit terms, 2: Adams-Bashforth
  bool dealias = true;
  int output_every = 1;   // steps between diagnostics records
  Real cfl_safety = 0.5;
  bool adaptive = false;  // shrink dt instead of aborting on a CFL violation

  void validate() const;
};

// Crank-Nicolson viscous / explicit convective and forcing terms, Galerkin in the
// discrete divergence-free no-slip space per horizontal mode. The first step (and
// any step after a dt change) uses Euler for the explicit terms.
class Integrator
{
public:
  Integrator(SimState state, SolverConfig config);
  ~Integrator();
  Integrator(Integrator &&) noexcept;

  SimState const &state() const { return state_; }
  SolverConfig const &config() const { return config_; }
  Real dt() const { return dt_; }

  // Advance one step. On failure throws NumericalAbort and leaves state() at the last good step.
  void step();

  // Advective CFL number of the current state for the current dt.
  Real cfl() const;

  // Full diagnostics for the current state. Integrals (cumD, resid) accumulate
  // every step by the trapezoid rule.
  DiagnosticsRecord diagnostics() const;

private:
  struct Impl;
  SimState state_;
  SolverConfig config_;
  Real dt_;
  std::unique_ptr<Impl> impl_;
};

// One step from a fresh integrator (first-order start for the explicit terms).
SimState step(SimState const &state, SolverConfig const &config);

struct RunResult
{
  Trajectory records;
  SimState final_state;
  bool aborted = false;
  std::string message;
};

using RunObserver = std::function<void(DiagnosticsRecord const &, SimState const &)>;

// Integrate to config.t_end, recording diagnostics at t = 0 and every output_every
// steps (and at the final step). A NumericalAbort ends the run early with the last
// good state; records up to that point are kept.
RunResult run(SimState initial, SolverConfig const &config, RunObserver const &observer = {});

// amplitude * exp(-nu lambda_k t) (g_k(x3), 0, 0) with g_k = cos(k pi x3 / 2L) for
// odd k and sin(k pi x3 / 2L) for even k, lambda_k = (k pi / 2L)^2.
VectorField exact_shear_solution(GridPtr const &grid, int k, Real amplitude, Real t, Real nu);
Real shear_eigenvalue(Grid const &grid, int k);

} // namespace chanreg
