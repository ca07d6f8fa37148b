#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "chanreg/core.hpp"

namespace chanreg {

inline constexpr char const *tool_version = "chanreg 0.1.0";

struct ConfigError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct GridConfig
{
  Index nx = 32, ny = 32, nz = 33;
  Real px = 2 * pi, py = 2 * pi, L = 1;
};

struct SolverParams
{
  Real nu = 1;
  Real dt = 1e-3;
  Real T = 1;
  int order = 2;
  bool dealias = true;
  Real cfl_safety = 0.5;
  bool adaptive = false;
  std::uint64_t seed = 0;
};

// type: zero | shear | perturbed_shear | random | checkpoint
struct InitialConfig
{
  std::string type = "shear";
  int mode = 1;
  Real amplitude = 1;
  Real perturbation = 0.1;
  Real decay = 2;
  int horizontal_cap = 4;
  int vertical_cap = 12;
  std::string path;
};

// type: none | shear | random | checkpoint. The profile is scaled by
// 1 + modulation * sin(omega * t).
struct ForcingConfig
{
  std::string type = "none";
  int mode = 1;
  Real amplitude = 1;
  Real modulation = 0;
  Real omega = 0;
  std::string path;
};

struct MonitorConfig
{
  bool energy_budget = true;
  bool decay_bounds = true;
  bool k1 = true;
  bool diff_ineq = true;
  bool k2_k = true;
};

// mode: unit | user | calibrated (path to a trajectory constants file)
struct ConstantsConfig
{
  std::string mode = "unit";
  Real value = 1;
  std::string path;
};

struct OutputConfig
{
  std::string dir = "chanreg_out";
  long every = 10;
  long checkpoint_every = 0; // steps; 0 writes only the final state
};

struct RunConfig
{
  GridConfig grid;
  SolverParams solver;
  InitialConfig initial;
  ForcingConfig forcing;
  MonitorConfig monitors;
  ConstantsConfig constants;
  OutputConfig output;

  bool operator==(RunConfig const &) const;
};

// JSON text with sections grid, solver, initial, forcing, monitors, constants, output.
// solver.nu and solver.T are required; every other key has a default. Unknown keys,
// wrong types and out-of-range values throw ConfigError naming the field.
RunConfig parse_config(std::string const &text);
RunConfig load_config(std::string const &path);

// Fully expanded JSON with sorted keys; parse_config(canonical_json(c)) == c.
std::string canonical_json(RunConfig const &c);

// FNV-1a of the canonical text with output.dir cleared, so the hash does not
// depend on where artifacts are written.
std::uint64_t config_hash(RunConfig const &c);
std::uint64_t fnv1a(std::string const &text);
std::string hex(std::uint64_t v);

// Levenshtein distance, used for unknown-key suggestions.
std::size_t edit_distance(std::string const &a, std::string const &b);

} // namespace chanreg
