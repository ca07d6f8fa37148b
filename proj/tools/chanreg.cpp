// chanreg: channel-flow solver, a priori bound monitors and inequality verification.

#include <iostream>

#include <CLI11.hpp>

#include "chanreg/commands.hpp"

namespace {

void ensemble_options(CLI::App &cmd, chanreg::SuiteOptions &o, chanreg::Index &nz)
{
  auto &s = o.spec;
  cmd.add_option("--n", s.count, "ensemble size")->capture_default_str();
  cmd.add_option("--seed", s.seed, "ensemble seed")->capture_default_str();
  cmd.add_option("--nx", s.nx, "Fourier points in x1")->capture_default_str();
  cmd.add_option("--ny", s.ny, "Fourier points in x2")->capture_default_str();
  cmd.add_option("--nz", nz, "Lobatto points in x3 (default 33, 65 for ibp)");
  cmd.add_option("--L", s.L, "channel half height")->capture_default_str();
  cmd.add_option("--decay", s.decay, "spectral decay of random fields")->capture_default_str();
  cmd.add_option("--horizontal-cap", s.horizontal_cap, "largest horizontal wavenumber")->capture_default_str();
  cmd.add_option("--vertical-cap", s.vertical_cap, "largest Legendre degree")->capture_default_str();
  cmd.add_option("--out", o.out_dir, "output directory")->capture_default_str();
}

} // namespace

int main(int argc, char **argv)
{
  using namespace chanreg;
  CLI::App app{"chanreg: channel Navier-Stokes solver with regularity-bound monitors"};
  app.set_version_flag("--version", tool_version);
  app.require_subcommand(1);

  std::string config_path;
  auto *run = app.add_subcommand("run", "integrate a configured run and check the a priori bounds");
  run->add_option("--config", config_path, "JSON run configuration")->required();

  SuiteOptions verify_opts;
  Index verify_nz = 0;
  auto *verify = app.add_subcommand("verify", "check inequalities over a random field ensemble");
  verify->add_option("--suite", verify_opts.suite, "suite id or all")->required();
  ensemble_options(*verify, verify_opts, verify_nz);

  SuiteOptions cal_opts;
  Index cal_nz = 0;
  auto *calibrate = app.add_subcommand("calibrate", "calibrate constants and write constants.json");
  calibrate->add_option("--suite", cal_opts.suite, "suite id, all, or trajectory")->required();
  calibrate->add_option("--config", cal_opts.config_path, "run configuration (trajectory suite)");
  ensemble_options(*calibrate, cal_opts, cal_nz);

  std::string in_dir, report_out;
  auto *report = app.add_subcommand("report", "summarize artifacts and write plot-ready data");
  report->add_option("--in", in_dir, "artifact directory")->required();
  report->add_option("--out", report_out, "directory for plot data (default: --in)");

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const &e) {
    int const code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }

  auto fix_nz = [](SuiteOptions &o, Index nz) { o.spec.nz = nz > 0 ? nz : (o.suite == "ibp" ? 65 : 33); };

  try {
    if (*run) {
      RunConfig cfg;
      try {
        cfg = load_config(config_path);
      } catch (ConfigError const &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
      }
      return cmd_run(cfg, std::cout, std::cerr);
    }
    if (*verify) {
      fix_nz(verify_opts, verify_nz);
      return cmd_verify(verify_opts, std::cout, std::cerr);
    }
    if (*calibrate) {
      fix_nz(cal_opts, cal_nz);
      return cmd_calibrate(cal_opts, std::cout, std::cerr);
    }
    return cmd_report(in_dir, report_out, std::cout, std::cerr);
  } catch (NumericalAbort const &e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return exit_abort;
  } catch (std::exception const &e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_io;
  }
}
