#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "chanreg/config.hpp"
#include "chanreg/estimates.hpp"
#include "chanreg/inequalities.hpp"

namespace chanreg {

inline constexpr int exit_ok = 0;
inline constexpr int exit_io = 1;
inline constexpr int exit_config = 2;
inline constexpr int exit_abort = 3;
inline constexpr int exit_verify = 4;

// When set and nonempty, replaces every output directory.
inline constexpr char const *output_dir_env = "CHANREG_OUTPUT_DIR";
std::string resolve_output_dir(std::string const &configured);

// Initial state and solver settings described by a config. Throws ConfigError.
struct RunSetup
{
  SimState initial;
  SolverConfig solver;
};
RunSetup build_run(RunConfig const &c);

// Constants for the trajectory checks. A calibrated file may hold any subset of
// k1, l2, l22, dh, v, k2; missing ones stay at 1 and are listed in `warnings`.
TrajectoryConstants load_constants(ConstantsConfig const &c, std::vector<std::string> &warnings);

// Writes diagnostics.csv, bounds.json and checkpoints into the output directory.
int cmd_run(RunConfig const &c, std::ostream &out, std::ostream &err);

struct SuiteOptions
{
  std::string suite;
  EnsembleSpec spec;
  std::string out_dir = "chanreg_out";
  std::string config_path; // calibrate --suite trajectory only
};

// Writes verify_<suite>.json and verify_<suite>.csv.
int cmd_verify(SuiteOptions const &o, std::ostream &out, std::ostream &err);

// Writes constants.json. Suite "trajectory" runs the config at config_path and
// calibrates the trajectory constants; other suites calibrate over an ensemble.
int cmd_calibrate(SuiteOptions const &o, std::ostream &out, std::ostream &err);

// Prints summary tables for the artifacts in in_dir and writes plot-ready
// whitespace-separated data next to them (or into out_dir when nonempty).
int cmd_report(std::string const &in_dir, std::string const &out_dir, std::ostream &out, std::ostream &err);

} // namespace chanreg
