#pragma once

#include <vector>

#include "chanreg/core.hpp"

namespace chanreg {

// One sample of a trajectory. Squared norms unless noted.
struct DiagnosticsRecord
{
  Real t = 0;
  Real E = 0;        // ||u||^2
  Real D = 0;        // ||grad u||^2
  Real Dh = 0;       // ||grad_h u||^2
  Real V2 = 0;       // <u, A u>
  Real crit = 0;     // ||grad u3~|| (not squared)
  Real resid = 0;    // energy residual r(t, 0)
  Real cumD = 0;     // int_0^t D
  Real dh_grad2 = 0; // ||grad_h grad u||^2
  Real Au2 = 0;      // ||A u||^2
  Real dz_u2 = 0;    // ||d3 u||^2
  Real f_norm = 0;   // ||f(t)||
  Real f_dot_u = 0;  // <f(t), u>
};

using Trajectory = std::vector<DiagnosticsRecord>;

} // namespace chanreg
