#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "chanreg/commands.hpp"
#include "chanreg/io.hpp"

using namespace chanreg;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(std::string const &name)
{
  fs::path p = fs::temp_directory_path() / "chanreg_test_cli" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string error_of(std::string const &text)
{
  try {
    parse_config(text);
  } catch (ConfigError const &e) {
    return e.what();
  }
  return "";
}

RunConfig small_run(fs::path const &dir, std::string const &extra = "")
{
  return parse_config(R"({"grid": {"nx": 8, "ny": 8, "nz": 17},
    "solver": {"nu": 1, "T": 0.05, "dt": 1e-3},
    "output": {"dir": ")" + dir.string() + R"(", "every": 5, "checkpoint_every": 25})" + extra + "}");
}

struct EnvGuard
{
  explicit EnvGuard(std::string const &value) { setenv(output_dir_env, value.c_str(), 1); }
  ~EnvGuard() { unsetenv(output_dir_env); }
};

} // namespace

TEST_CASE("minimal config fills the documented defaults")
{
  RunConfig const c = parse_config(R"({"solver": {"nu": 0.5, "T": 2}})");
  RunConfig d;
  d.solver.nu = 0.5;
  d.solver.T = 2;
  CHECK(c == d);
  CHECK(c.grid.nx == 32);
  CHECK(c.grid.nz == 33);
  CHECK(c.grid.px == doctest::Approx(2 * pi));
  CHECK(c.solver.dt == 1e-3);
  CHECK(c.solver.order == 2);
  CHECK(c.initial.type == "shear");
  CHECK(c.forcing.type == "none");
  CHECK(c.constants.mode == "unit");
  CHECK(c.output.every == 10);

  json const echo = json::parse(canonical_json(c));
  CHECK(echo["solver"]["nu"] == 0.5);
  CHECK(echo["grid"]["nx"] == 32);
  CHECK(echo["monitors"]["k2_k"] == true);
}

TEST_CASE("config errors name the field")
{
  CHECK(error_of(R"({"solver": {"nu": -1, "T": 1}})") == "solver.nu: must be > 0 (got -1)");
  CHECK(error_of(R"({"solver": {"T": 1}})").find("solver.nu: required") == 0);
  CHECK(error_of(R"({"solver": {"nu": 1}})").find("solver.T: required") == 0);
  CHECK(error_of(R"({"solver": {"nu": "one", "T": 1}})") == "solver.nu: expected a number");
  CHECK(error_of(R"({"solver": {"nu": 1, "T": 1, "order": 3}})").find("solver.order: must lie in [1, 2]") == 0);
  CHECK(error_of(R"({"solver": {"nu": 1, "T": 1}, "grid": {"nx": 9}})").find("nx and ny must be even") !=
        std::string::npos);
  CHECK(error_of(R"({"solver": {"nu": 1, "T": 1}, "initial": {"type": "vortex"}})").find("initial.type: must be one of") ==
        0);
  CHECK(error_of(R"({"solver": {"nu": 1, "T": 1}, "initial": {"type": "checkpoint"}})").find("initial.path") == 0);
  CHECK(error_of(R"({"solver": {"nu": 1, "T": 1}, "output": {"every": 4, "checkpoint_every": 6}})")
          .find("output.checkpoint_every") == 0);
  CHECK(error_of("[1, 2]") == "config: top level must be an object");
}

TEST_CASE("parse errors carry line and column")
{
  std::string const e = error_of("{\"solver\": {\"nu\": 1,\n \"T\": 1,}}");
  CHECK(e.find("line 2") != std::string::npos);
  CHECK(e.find("column") != std::string::npos);
}

TEST_CASE("unknown keys are rejected with the nearest suggestion")
{
  CHECK(error_of(R"({"solver": {"viscocity": 1, "T": 1}})") ==
        "solver.viscocity: unknown key \"viscocity\"; did you mean \"nu\"?");
  CHECK(error_of(R"({"solver": {"nu": 1, "T": 1, "time_stp": 1}})").find("did you mean \"dt\"") != std::string::npos);
  CHECK(error_of(R"({"solvr": {"nu": 1, "T": 1}})").find("did you mean \"solver\"") != std::string::npos);
  CHECK(error_of(R"({"nu": 1})").find("did you mean \"solver.nu\"") != std::string::npos);
  std::string const far = error_of(R"({"solver": {"nu": 1, "T": 1, "qqqqqqqqqq": 1}})");
  CHECK(far.find("unknown key") != std::string::npos);
  CHECK(far.find("did you mean") == std::string::npos);

  CHECK(edit_distance("viscocity", "viscosity") == 1);
  CHECK(edit_distance("", "abc") == 3);
  CHECK(edit_distance("kitten", "sitting") == 3);
}

TEST_CASE("canonical form round-trips and feeds the hash")
{
  RunConfig c = parse_config(R"({"solver": {"nu": 0.01, "T": 3, "seed": 18446744073709551615},
    "grid": {"px": 3.3, "L": 0.7}, "forcing": {"type": "random", "modulation": -0.5, "omega": 2}})");
  std::string const text = canonical_json(c);
  RunConfig const back = parse_config(text);
  CHECK(back == c);
  CHECK(canonical_json(back) == text);
  CHECK(back.solver.seed == 18446744073709551615ULL);
  CHECK(back.grid.px == 3.3);

  std::uint64_t const h = config_hash(c);
  RunConfig moved = c;
  moved.output.dir = "elsewhere";
  CHECK(config_hash(moved) == h);
  RunConfig changed = c;
  changed.solver.nu = 0.02;
  CHECK(config_hash(changed) != h);
  CHECK(hex(0x0123456789abcdefULL) == "0123456789abcdef");
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("checkpoint round trip and layout")
{
  fs::path const dir = scratch("checkpoint");
  GridPtr g = make_grid(6, 4, 9, 2.5, 1.5, 0.8);
  RandomSpec spec;
  spec.seed = 5;
  VectorField const u = random_vector_field(g, spec);
  std::string const path = (dir / "u.bin").string();
  write_checkpoint(path, u, 0.375, 0xfeedULL);

  std::string const bytes = read_text(path);
  std::size_t const n = 6 * 4 * 9;
  REQUIRE(bytes.size() == 96 + 3 * n * 8);
  CHECK(bytes.substr(0, 8) == "CHREGFLD");
  CHECK(static_cast<unsigned char>(bytes[8]) == 1);
  CHECK(bytes[9] == 0);
  CHECK(static_cast<unsigned char>(bytes[12]) == 3);
  CHECK(static_cast<unsigned char>(bytes[16]) == 6);

  Checkpoint const c = read_checkpoint(path);
  CHECK(c.time == 0.375);
  CHECK(c.config_hash == 0xfeedULL);
  CHECK(c.tool == tool_version);
  VectorField const v = c.vector();
  CHECK(v.grid().same_shape(*g));
  for (int k = 0; k < 3; ++k) { CHECK((v[k].values() == u[k].values()).all()); }

  write_checkpoint((dir / "s.bin").string(), u[1], 1.0, 0);
  Checkpoint const s = read_checkpoint((dir / "s.bin").string());
  CHECK(s.comps.size() == 1);
  CHECK_THROWS_AS(s.vector(), IoError);

  write_text((dir / "cut.bin").string(), bytes.substr(0, bytes.size() - 8));
  CHECK_THROWS_AS(read_checkpoint((dir / "cut.bin").string()), IoError);
  write_text((dir / "junk.bin").string(), "not a checkpoint at all, really");
  CHECK_THROWS_AS(read_checkpoint((dir / "junk.bin").string()), IoError);
}

TEST_CASE("shear run: exit 0, monotone energy, exact final state")
{
  fs::path const dir = scratch("shear");
  RunConfig const c = small_run(dir);
  std::ostringstream out, err;
  REQUIRE(cmd_run(c, out, err) == exit_ok);
  CHECK(err.str().empty());
  CHECK(out.str().find("sup ||grad u3~||_2 = ") != std::string::npos);
  CHECK(out.str().find("bounds held: yes") != std::string::npos);

  Trajectory const traj = read_diagnostics_csv((dir / "diagnostics.csv").string());
  REQUIRE(traj.size() == 11);
  for (size_t i = 1; i < traj.size(); ++i) { CHECK(traj[i].E < traj[i - 1].E); }
  CHECK(traj.back().t == doctest::Approx(0.05));

  CHECK(fs::exists(dir / "checkpoint_00000025.bin"));
  CHECK(fs::exists(dir / "checkpoint_00000050.bin"));
  Checkpoint const fin = read_checkpoint((dir / "final.bin").string());
  CHECK(fin.config_hash == config_hash(c));
  VectorField const u = fin.vector();
  VectorField const exact = exact_shear_solution(u.grid_ptr(), 1, 1, fin.time, 1);
  CHECK(norm_lq(u - exact, 2) / norm_lq(exact, 2) < 1e-5);

  json const b = json::parse(read_text((dir / "bounds.json").string()));
  CHECK(b["tool"] == tool_version);
  CHECK(b["config_hash"] == hex(config_hash(c)));
  CHECK(b["all_hold"] == true);
  CHECK(b["reports"].size() == 7);
  CHECK(b["energy_budget"]["max_abs"].get<double>() < 1e-3);

  std::string const csv = read_text((dir / "diagnostics.csv").string());
  CHECK(csv.rfind("# tool: " + std::string(tool_version) + "\n# config_hash: " + hex(config_hash(c)) + "\n", 0) == 0);
}

TEST_CASE("monitor toggles select reports")
{
  fs::path const dir = scratch("toggles");
  RunConfig const c = small_run(dir, R"(, "monitors": {"k1": false, "k2_k": false, "diff_ineq": false})");
  std::ostringstream out, err;
  REQUIRE(cmd_run(c, out, err) == exit_ok);
  json const b = json::parse(read_text((dir / "bounds.json").string()));
  REQUIRE(b["reports"].size() == 2);
  CHECK(b["reports"][0]["name"] == "energy_decay");
  CHECK(b["reports"][1]["name"] == "dissipation_growth");
}

TEST_CASE("dt above the CFL limit aborts with exit 3")
{
  fs::path const dir = scratch("cfl");
  RunConfig c = small_run(dir, R"(, "initial": {"type": "random", "amplitude": 200})");
  c.solver.dt = 0.02;
  c.solver.T = 0.2;
  std::ostringstream out, err;
  CHECK(cmd_run(c, out, err) == exit_abort);
  CHECK(err.str().find("CFL") != std::string::npos);
  CHECK(fs::exists(dir / "last_good.bin"));
  CHECK_FALSE(fs::exists(dir / "final.bin"));
  Trajectory const traj = read_diagnostics_csv((dir / "diagnostics.csv").string());
  CHECK(traj.size() >= 1);
  CHECK(read_checkpoint((dir / "last_good.bin").string()).time == traj.back().t);
  json const b = json::parse(read_text((dir / "bounds.json").string()));
  CHECK(b["aborted"] == true);
  CHECK(b["all_hold"] == false);

  c.solver.adaptive = true;
  c.output.dir = (dir / "adaptive").string();
  std::ostringstream out2, err2;
  CHECK(cmd_run(c, out2, err2) == exit_ok);
}

TEST_CASE("config problems found while building a run exit 2")
{
  fs::path const dir = scratch("build");
  RunConfig c = small_run(dir);
  c.initial.type = "checkpoint";
  c.initial.path = (dir / "missing.bin").string();
  std::ostringstream out, err;
  CHECK(cmd_run(c, out, err) == exit_config);
  CHECK(err.str().find("initial.path") != std::string::npos);

  GridPtr other = make_grid(8, 8, 9, 2 * pi, 2 * pi, 1);
  write_checkpoint((dir / "coarse.bin").string(), exact_shear_solution(other, 1, 1, 0, 1), 0, 0);
  c.initial.path = (dir / "coarse.bin").string();
  std::ostringstream err2;
  CHECK(cmd_run(c, out, err2) == exit_config);
  CHECK(err2.str().find("does not match") != std::string::npos);

  GridPtr same = make_grid(8, 8, 17, 2 * pi, 2 * pi, 1);
  RandomSpec spec;
  write_checkpoint((dir / "raw.bin").string(), random_vector_field(same, spec), 0, 0);
  c.initial.path = (dir / "raw.bin").string();
  std::ostringstream err3;
  CHECK(cmd_run(c, out, err3) == exit_config);
  CHECK(err3.str().find("not divergence-free") != std::string::npos);
}

TEST_CASE("restart from a checkpoint continues the shear decay")
{
  fs::path const dir = scratch("restart");
  RunConfig a = small_run(dir / "a");
  std::ostringstream out, err;
  REQUIRE(cmd_run(a, out, err) == exit_ok);
  RunConfig b = small_run(dir / "b", R"(, "initial": {"type": "checkpoint", "path": ")" +
                                         (dir / "a" / "final.bin").string() + R"("})");
  REQUIRE(cmd_run(b, out, err) == exit_ok);
  VectorField const u = read_checkpoint((dir / "b" / "final.bin").string()).vector();
  VectorField const exact = exact_shear_solution(u.grid_ptr(), 1, 1, 0.1, 1);
  CHECK(norm_lq(u - exact, 2) / norm_lq(exact, 2) < 1e-5);
}

TEST_CASE("reruns are byte-identical and the env var redirects output")
{
  fs::path const dir = scratch("determinism");
  RunConfig const c = small_run(dir, R"(, "initial": {"type": "perturbed_shear", "perturbation": 0.3},
    "forcing": {"type": "random", "amplitude": 2, "modulation": 0.5, "omega": 3})");
  char const *files[] = {"diagnostics.csv", "bounds.json", "final.bin", "checkpoint_00000025.bin"};
  std::ostringstream out, err;
  REQUIRE(cmd_run(c, out, err) == exit_ok);
  std::vector<std::string> first;
  for (auto const *f : files) { first.push_back(read_text((dir / f).string())); }
  REQUIRE(cmd_run(c, out, err) == exit_ok);
  for (size_t i = 0; i < first.size(); ++i) {
    INFO(files[i]);
    CHECK(read_text((dir / files[i]).string()) == first[i]);
  }

  fs::path const redirected = dir / "env";
  {
    EnvGuard env(redirected.string());
    REQUIRE(cmd_run(c, out, err) == exit_ok);
  }
  for (size_t i = 0; i < first.size(); ++i) { CHECK(read_text((redirected / files[i]).string()) == first[i]); }
  CHECK(resolve_output_dir("x") == "x");
}

TEST_CASE("verify: suites, exit codes and artifacts")
{
  fs::path const dir = scratch("verify");
  SuiteOptions o;
  o.out_dir = dir.string();
  o.spec.count = 30;
  o.spec.nx = o.spec.ny = 16;
  o.spec.nz = 17;

  std::ostringstream out, err;
  o.suite = "lemma2";
  CHECK(cmd_verify(o, out, err) == exit_config);
  CHECK(err.str().find("unknown suite \"lemma2\"") != std::string::npos);

  o.suite = "minkowski";
  CHECK(cmd_verify(o, out, err) == exit_ok);
  json const doc = json::parse(read_text((dir / "verify_minkowski.json").string()));
  CHECK(doc["tool"] == tool_version);
  CHECK(doc["hard_failures"] == 0);
  CHECK(doc["reports"][0]["entries"].size() == 30);
  std::string const csv = read_text((dir / "verify_minkowski.csv").string());
  CHECK(csv.find("id,n,sup_ratio,calibrated_C,violations\nminkowski,30,") != std::string::npos);
  CHECK(csv.rfind("# tool: ", 0) == 0);

  o.suite = "poincare";
  CHECK(cmd_verify(o, out, err) == exit_ok);
  std::string const first = read_text((dir / "verify_poincare.json").string());
  CHECK(cmd_verify(o, out, err) == exit_ok);
  CHECK(read_text((dir / "verify_poincare.json").string()) == first);
}

TEST_CASE("calibrate: minimum count, determinism, Poincare optimum")
{
  fs::path const dir = scratch("calibrate");
  SuiteOptions o;
  o.out_dir = dir.string();
  o.suite = "poincare";
  o.spec.nx = o.spec.ny = 8;
  o.spec.nz = 33;
  o.spec.horizontal_cap = 0;
  o.spec.vertical_cap = 2;
  o.spec.count = 99;

  std::ostringstream out, err;
  CHECK(cmd_calibrate(o, out, err) == exit_config);
  CHECK(err.str().find("at least 100") != std::string::npos);

  o.spec.count = 100;
  REQUIRE(cmd_calibrate(o, out, err) == exit_ok);
  std::string const first = read_text((dir / "constants.json").string());
  REQUIRE(cmd_calibrate(o, out, err) == exit_ok);
  CHECK(read_text((dir / "constants.json").string()) == first);

  json const doc = json::parse(first);
  Real const c = doc["constants"]["poincare_gradient"].get<double>();
  CHECK(c >= pi / 2 * (1 - 1e-9));
  CHECK(c <= pi / 2 * 1.01);

  o.suite = "nope";
  CHECK(cmd_calibrate(o, out, err) == exit_config);
  o.suite = "trajectory";
  CHECK(cmd_calibrate(o, out, err) == exit_config);
}

TEST_CASE("trajectory calibration feeds the calibrated constant mode")
{
  fs::path const dir = scratch("trajectory");
  RunConfig cal = small_run(dir / "cal", R"(, "initial": {"type": "perturbed_shear"},
    "forcing": {"type": "shear", "amplitude": 0.5})");
  write_text((dir / "cal.json").string(), canonical_json(cal));

  SuiteOptions o;
  o.suite = "trajectory";
  o.config_path = (dir / "cal.json").string();
  o.out_dir = (dir / "const").string();
  std::ostringstream out, err;
  REQUIRE(cmd_calibrate(o, out, err) == exit_ok);
  json const k = json::parse(read_text((dir / "const" / "constants.json").string()));
  CHECK(k["suite"] == "trajectory");
  for (auto const *key : {"k1", "l2", "l22", "dh", "v", "k2"}) { CHECK(k["constants"].contains(key)); }

  RunConfig run = cal;
  run.output.dir = (dir / "run").string();
  run.constants.mode = "calibrated";
  run.constants.path = (dir / "const" / "constants.json").string();
  REQUIRE(cmd_run(run, out, err) == exit_ok);
  json const b = json::parse(read_text((dir / "run" / "bounds.json").string()));
  CHECK(b["constants"]["mode"] == "calibrated");
  CHECK(b["constants"]["k1"] == k["constants"]["k1"]);
  CHECK(b["warnings"].empty());

  std::vector<std::string> warnings;
  write_text((dir / "partial.json").string(), R"({"constants": {"k1": 2.5, "k2": "inf"}})");
  ConstantsConfig partial{"calibrated", 1, (dir / "partial.json").string()};
  TrajectoryConstants const t = load_constants(partial, warnings);
  CHECK(t.k1 == 2.5);
  CHECK(std::isinf(t.k2));
  CHECK(t.v == 1);
  CHECK(warnings.size() == 4);

  write_text((dir / "bad.json").string(), R"({"other": 1})");
  ConstantsConfig bad{"calibrated", 1, (dir / "bad.json").string()};
  CHECK_THROWS_AS(load_constants(bad, warnings), ConfigError);
}

TEST_CASE("report renders tables and plot data")
{
  fs::path const dir = scratch("report");
  RunConfig const c = small_run(dir);
  std::ostringstream out, err;
  REQUIRE(cmd_run(c, out, err) == exit_ok);
  std::ostringstream rep;
  CHECK(cmd_report(dir.string(), "", rep, err) == exit_ok);
  CHECK(rep.str().find("diagnostics: 11 samples") != std::string::npos);
  CHECK(rep.str().find("energy_decay") != std::string::npos);
  std::string const dat = read_text((dir / "diagnostics.dat").string());
  CHECK(std::count(dat.begin(), dat.end(), '\n') == 12);
  CHECK(fs::exists(dir / "bounds.dat"));

  fs::path const empty = scratch("report_empty");
  std::ostringstream err2;
  CHECK(cmd_report(empty.string(), "", rep, err2) == exit_config);
  CHECK(cmd_report((empty / "missing").string(), "", rep, err2) == exit_config);
}
