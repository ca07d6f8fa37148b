#include "chanreg/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "chanreg/io.hpp"
#include "chanreg/stokes.hpp"

namespace chanreg {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// JSON has no inf or nan; write them as strings.
json num(Real v)
{
  if (std::isfinite(v)) { return v; }
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

Real read_num(json const &v)
{
  if (v.is_number()) { return v.get<Real>(); }
  if (v.is_string()) {
    std::string const s = v.get<std::string>();
    if (s == "inf") { return INFINITY; }
    if (s == "-inf") { return -INFINITY; }
    if (s == "nan") { return NAN; }
  }
  throw ConfigError("expected a number, got " + v.dump());
}

std::string dump(json const &doc) { return doc.dump(2) + "\n"; }

std::string fmt(char const *f, Real v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

json header(std::uint64_t hash)
{
  return {{"tool", tool_version}, {"config_hash", hex(hash)}};
}

void make_dir(std::string const &dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) { throw IoError(dir + ": cannot create directory (" + ec.message() + ")"); }
}

VectorField normalized_random(GridPtr const &grid, std::uint64_t seed, InitialConfig const &c, std::string const &field)
{
  RandomSpec spec;
  spec.seed = seed;
  spec.decay = c.decay;
  spec.horizontal_cap = c.horizontal_cap;
  spec.vertical_cap = c.vertical_cap;
  spec.flags = {true, true};
  VectorField r = project_no_slip(random_vector_field(grid, spec));
  Real const n = norm_lq(r, 2);
  if (!(n > 0)) { throw ConfigError(field + ": random field is identically zero for these caps"); }
  return (1 / n) * r;
}

VectorField from_checkpoint(std::string const &path, GridPtr const &grid, std::string const &field)
{
  Checkpoint cp;
  try {
    cp = read_checkpoint(path);
  } catch (IoError const &e) {
    throw ConfigError(field + ": " + e.what());
  }
  VectorField u = cp.vector();
  Grid const &g = u.grid();
  if (!g.same_shape(*grid)) {
    throw ConfigError(field + ": checkpoint grid " + std::to_string(g.nx()) + "x" + std::to_string(g.ny()) + "x" +
                      std::to_string(g.nz()) + " does not match the configured grid");
  }
  VectorField v(grid);
  for (int c = 0; c < 3; ++c) { v[c] = ScalarField(grid, u[c].values()); }
  v.divergence_free = v.no_slip = false;
  return v;
}

json report_json(BoundReport const &r)
{
  json in = json::object();
  for (auto const &[k, v] : r.inputs) { in[k] = num(v); }
  return {{"name", r.name},
          {"inputs", in},
          {"bound", num(r.bound)},
          {"measured", num(r.measured)},
          {"margin", num(r.margin)},
          {"constant", num(r.constant)},
          {"t_worst", num(r.t_worst)},
          {"samples", r.samples},
          {"violations", r.violations},
          {"violation_fraction", num(r.violation_fraction())},
          {"min_constant", num(r.min_constant)},
          {"holds", r.holds()},
          {"warnings", r.warnings}};
}

bool enabled(MonitorConfig const &m, std::string const &name)
{
  if (name == "K1") { return m.k1; }
  if (name == "energy_decay" || name == "dissipation_growth") { return m.decay_bounds; }
  if (name == "horizontal_gradient_inequality" || name == "v_norm_inequality") { return m.diff_ineq; }
  if (name == "K2" || name == "K") { return m.k2_k; }
  return true;
}

json ensemble_json(std::string const &suite, EnsembleSpec const &s)
{
  return {{"suite", suite},
          {"seed", s.seed},
          {"count", s.count},
          {"decay", s.decay},
          {"horizontal_cap", s.horizontal_cap},
          {"vertical_cap", s.vertical_cap},
          {"nx", s.nx},
          {"ny", s.ny},
          {"nz", s.nz},
          {"px", s.px},
          {"py", s.py},
          {"L", s.L},
          {"r", s.r},
          {"alpha", s.alpha},
          {"minkowski_r", s.minkowski_r}};
}

// Violations counted against the constant that applies to the report.
long report_violations(InequalityReport const &r)
{
  if (r.id == "ibp") { return r.violations(ibp_tolerance); }
  if (r.constant_free) { return r.violations(1); }
  return r.violations(r.calibrated());
}

json inequality_json(InequalityReport const &r)
{
  json entries = json::array();
  for (auto const &e : r.entries) {
    entries.push_back({{"lhs", num(e.lhs)}, {"rhs_factor", num(e.rhs_factor)}, {"flagged", e.flagged}});
  }
  return {{"id", r.id},
          {"lower_bound", r.lower_bound},
          {"constant_free", r.constant_free},
          {"count", r.count()},
          {"degenerate", r.degenerate},
          {"flagged", r.flagged},
          {"extreme_ratio", num(r.extreme_ratio())},
          {"calibrated_C", num(r.calibrated())},
          {"violations", report_violations(r)},
          {"warnings", r.warnings},
          {"entries", entries}};
}

bool known_suite(std::string const &s)
{
  auto const &ids = suite_ids();
  return s == "all" || std::find(ids.begin(), ids.end(), s) != ids.end();
}

std::string suite_list()
{
  std::string s = "all";
  for (auto const &id : suite_ids()) { s += ", " + id; }
  return s;
}

} // namespace

std::string resolve_output_dir(std::string const &configured)
{
  char const *env = std::getenv(output_dir_env);
  return env && *env ? std::string(env) : configured;
}

namespace {

VectorField initial_velocity(RunConfig const &c, GridPtr const &grid)
{
  InitialConfig const &ic = c.initial;
  std::uint64_t const seed = splitmix64(c.solver.seed);
  if (ic.type == "zero") {
    VectorField u(grid);
    u.divergence_free = u.no_slip = true;
    return u;
  }
  if (ic.type == "shear") { return exact_shear_solution(grid, ic.mode, ic.amplitude, 0, c.solver.nu); }
  if (ic.type == "perturbed_shear") {
    return exact_shear_solution(grid, ic.mode, ic.amplitude, 0, c.solver.nu) +
           (ic.perturbation * ic.amplitude) * normalized_random(grid, seed, ic, "initial");
  }
  if (ic.type == "random") { return ic.amplitude * normalized_random(grid, seed, ic, "initial"); }
  VectorField u = from_checkpoint(ic.path, grid, "initial.path");
  VectorField p = project_no_slip(u);
  Real const scale = std::max(norm_lq(u, 2), Real(1e-300));
  if (norm_lq(p - u, 2) > 1e-8 * scale) {
    throw ConfigError("initial.path: checkpoint velocity is not divergence-free and no-slip on this grid");
  }
  return p;
}

} // namespace

RunSetup build_run(RunConfig const &c)
{
  GridPtr grid = make_grid(c.grid.nx, c.grid.ny, c.grid.nz, c.grid.px, c.grid.py, c.grid.L);
  RunSetup s{SimState{initial_velocity(c, grid), 0, c.solver.nu}, SolverConfig{}};
  s.solver.dt = c.solver.dt;
  s.solver.t_end = c.solver.T;
  s.solver.order = c.solver.order;
  s.solver.dealias = c.solver.dealias;
  s.solver.output_every = static_cast<int>(c.output.every);
  s.solver.cfl_safety = c.solver.cfl_safety;
  s.solver.adaptive = c.solver.adaptive;

  InitialConfig const &ic = c.initial;
  std::uint64_t const seed = c.solver.seed;
  ForcingConfig const &fc = c.forcing;
  if (fc.type != "none") {
    VectorField g(grid);
    if (fc.type == "shear") {
      g = shear_forcing(grid, fc.mode, fc.amplitude, c.solver.nu);
    } else if (fc.type == "random") {
      g = fc.amplitude * normalized_random(grid, splitmix64(seed ^ 0x5bd1e995ULL), ic, "forcing");
      g.divergence_free = g.no_slip = false;
    } else {
      g = from_checkpoint(fc.path, grid, "forcing.path");
    }
    s.initial.forcing = std::make_shared<Forcing>(std::move(g), fc.modulation, fc.omega);
  }
  try {
    s.solver.validate();
  } catch (std::invalid_argument const &e) {
    throw ConfigError(e.what());
  }
  return s;
}

TrajectoryConstants load_constants(ConstantsConfig const &c, std::vector<std::string> &warnings)
{
  TrajectoryConstants k;
  if (c.mode == "unit") { return k; }
  if (c.mode == "user") {
    k.k1 = k.l2 = k.l22 = k.dh = k.v = k.k2 = c.value;
    return k;
  }
  json doc;
  try {
    doc = json::parse(read_text(c.path));
  } catch (IoError const &e) {
    throw ConfigError(std::string("constants.path: ") + e.what());
  } catch (json::exception const &e) {
    throw ConfigError("constants.path: " + c.path + ": " + e.what());
  }
  if (!doc.contains("constants") || !doc["constants"].is_object()) {
    throw ConfigError("constants.path: " + c.path + " has no \"constants\" object");
  }
  json const &cs = doc["constants"];
  std::pair<char const *, Real *> const slots[] = {{"k1", &k.k1}, {"l2", &k.l2}, {"l22", &k.l22},
                                                   {"dh", &k.dh}, {"v", &k.v},   {"k2", &k.k2}};
  for (auto const &[key, slot] : slots) {
    if (cs.contains(key)) {
      try {
        *slot = read_num(cs[key]);
      } catch (ConfigError const &e) {
        throw ConfigError(std::string("constants.path: constants.") + key + ": " + e.what());
      }
    } else {
      warnings.push_back(std::string("constant ") + key + " not in " + c.path + "; using 1");
    }
  }
  return k;
}

int cmd_run(RunConfig const &c, std::ostream &out, std::ostream &err)
{
  std::optional<RunSetup> built;
  TrajectoryConstants constants;
  std::vector<std::string> warnings;
  try {
    built = build_run(c);
    constants = load_constants(c.constants, warnings);
  } catch (ConfigError const &e) {
    err << "config error: " << e.what() << "\n";
    return exit_config;
  }
  RunSetup const &setup = *built;
  std::uint64_t const hash = config_hash(c);
  std::string const dir = resolve_output_dir(c.output.dir);
  try {
    make_dir(dir);
    TrajectoryParams const params = trajectory_params(setup.initial, setup.solver);
    DiagnosticsCsv csv((fs::path(dir) / "diagnostics.csv").string(), hash);
    long const every = c.output.checkpoint_every;
    RunResult res = run(setup.initial, setup.solver, [&](DiagnosticsRecord const &r, SimState const &s) {
      csv.write(r);
      if (every > 0 && s.steps > 0 && s.steps % every == 0) {
        char name[40];
        std::snprintf(name, sizeof name, "checkpoint_%08ld.bin", s.steps);
        write_checkpoint((fs::path(dir) / name).string(), s.u, s.t, hash);
      }
    });
    std::string const final_name = res.aborted ? "last_good.bin" : "final.bin";
    write_checkpoint((fs::path(dir) / final_name).string(), res.final_state.u, res.final_state.t, hash);

    Real sup_crit = 0;
    for (auto const &r : res.records) { sup_crit = std::max(sup_crit, r.crit); }

    json doc = header(hash);
    doc["config"] = json::parse(canonical_json(c));
    doc["aborted"] = res.aborted;
    doc["message"] = res.message;
    doc["t_final"] = num(res.final_state.t);
    doc["steps"] = res.final_state.steps;
    doc["sup_crit"] = num(sup_crit);
    doc["constants"] = {{"mode", c.constants.mode}, {"k1", num(constants.k1)}, {"l2", num(constants.l2)},
                        {"l22", num(constants.l22)}, {"dh", num(constants.dh)}, {"v", num(constants.v)},
                        {"k2", num(constants.k2)}};
    doc["params"] = {{"nu", num(params.nu)}, {"L", num(params.L)}, {"F", num(params.F)}, {"T", num(params.T)},
                     {"u0_l2sq", num(params.u0_l2sq)}, {"u0_h1sq", num(params.u0_h1sq)}};

    bool all_hold = true;
    long checked = 0, held = 0;
    json reports = json::array();
    if (!res.aborted) {
      if (c.monitors.energy_budget) {
        EnergyBudget const b = energy_budget(res.records, c.solver.nu);
        doc["energy_budget"] = {{"max_abs", num(b.max_abs)},
                                {"final", num(b.residual.empty() ? 0 : b.residual.back())},
                                {"quadrature_error", num(b.quadrature_error)},
                                {"warnings", b.warnings}};
      }
      for (auto const &r : trajectory_reports(res.records, params, constants)) {
        if (!enabled(c.monitors, r.name)) { continue; }
        reports.push_back(report_json(r));
        ++checked;
        if (r.holds()) {
          ++held;
        } else {
          all_hold = false;
        }
      }
    } else {
      all_hold = false;
    }
    doc["reports"] = reports;
    doc["all_hold"] = all_hold;
    doc["warnings"] = warnings;
    write_text((fs::path(dir) / "bounds.json").string(), dump(doc));

    out << "t = " << format_real(res.final_state.t) << ", sup ||grad u3~||_2 = " << fmt("%.6e", sup_crit)
        << ", bounds held: " << (all_hold ? "yes" : "no") << " (" << held << " of " << checked << ")\n";
    if (res.aborted) {
      err << "numerical abort: " << res.message << "\n";
      return exit_abort;
    }
    return exit_ok;
  } catch (IoError const &e) {
    err << "I/O error: " << e.what() << "\n";
    return exit_io;
  }
}

int cmd_verify(SuiteOptions const &o, std::ostream &out, std::ostream &err)
{
  if (!known_suite(o.suite)) {
    err << "usage error: unknown suite \"" << o.suite << "\"; expected one of " << suite_list() << "\n";
    return exit_config;
  }
  if (o.spec.count < 1) {
    err << "usage error: --n must be at least 1\n";
    return exit_config;
  }
  json const ens = ensemble_json(o.suite, o.spec);
  std::uint64_t const hash = fnv1a(ens.dump());
  std::vector<InequalityReport> reports;
  try {
    reports = run_suite(o.suite, o.spec);
  } catch (std::invalid_argument const &e) {
    err << "usage error: " << e.what() << "\n";
    return exit_config;
  }
  long const failures = hard_failures(reports);
  std::string const dir = resolve_output_dir(o.out_dir);
  try {
    make_dir(dir);
    json doc = header(hash);
    doc["ensemble"] = ens;
    doc["hard_failures"] = failures;
    json rs = json::array();
    std::string csv = "# tool: " + std::string(tool_version) + "\n# config_hash: " + hex(hash) +
                      "\nid,n,sup_ratio,calibrated_C,violations\n";
    for (auto const &r : reports) {
      rs.push_back(inequality_json(r));
      long const v = report_violations(r);
      csv += r.id + "," + std::to_string(r.count()) + "," + format_real(r.extreme_ratio()) + "," +
             format_real(r.calibrated()) + "," + std::to_string(v) + "\n";
      char line[160];
      std::snprintf(line, sizeof line, "%-32s n=%-5ld %s=%-14.8g C=%-14.8g violations=%ld\n", r.id.c_str(), r.count(),
                    r.lower_bound ? "inf_ratio" : "sup_ratio", r.extreme_ratio(), r.calibrated(), v);
      out << line;
    }
    doc["reports"] = rs;
    write_text((fs::path(dir) / ("verify_" + o.suite + ".json")).string(), dump(doc));
    write_text((fs::path(dir) / ("verify_" + o.suite + ".csv")).string(), csv);
  } catch (IoError const &e) {
    err << "I/O error: " << e.what() << "\n";
    return exit_io;
  }
  if (failures > 0) {
    err << "verification failed: " << failures << " hard failure(s)\n";
    return exit_verify;
  }
  return exit_ok;
}

int cmd_calibrate(SuiteOptions const &o, std::ostream &out, std::ostream &err)
{
  json doc;
  if (o.suite == "trajectory") {
    if (o.config_path.empty()) {
      err << "usage error: calibrate --suite trajectory requires --config\n";
      return exit_config;
    }
    RunConfig cfg;
    std::optional<RunSetup> setup;
    try {
      cfg = load_config(o.config_path);
      setup = build_run(cfg);
    } catch (ConfigError const &e) {
      err << "config error: " << e.what() << "\n";
      return exit_config;
    }
    RunResult const res = run(setup->initial, setup->solver);
    if (res.aborted) {
      err << "numerical abort: " << res.message << "\n";
      return exit_abort;
    }
    TrajectoryConstants const k =
      calibrate_trajectory(res.records, trajectory_params(setup->initial, setup->solver));
    doc = header(config_hash(cfg));
    doc["suite"] = "trajectory";
    doc["constants"] = {{"k1", num(k.k1)}, {"l2", num(k.l2)}, {"l22", num(k.l22)},
                        {"dh", num(k.dh)}, {"v", num(k.v)},   {"k2", num(k.k2)}};
  } else {
    if (!known_suite(o.suite)) {
      err << "usage error: unknown suite \"" << o.suite << "\"; expected trajectory or one of " << suite_list()
          << "\n";
      return exit_config;
    }
    std::map<std::string, Real> cs;
    try {
      cs = calibrate_constant(o.suite, o.spec);
    } catch (std::invalid_argument const &e) {
      err << "usage error: " << e.what() << "\n";
      return exit_config;
    } catch (std::runtime_error const &e) {
      err << "degenerate ensemble: " << e.what() << "\n";
      return exit_config;
    }
    json const ens = ensemble_json(o.suite, o.spec);
    doc = header(fnv1a(ens.dump()));
    doc["suite"] = o.suite;
    doc["ensemble"] = ens;
    json j = json::object();
    for (auto const &[k, v] : cs) { j[k] = num(v); }
    doc["constants"] = j;
  }
  std::string const dir = resolve_output_dir(o.out_dir);
  try {
    make_dir(dir);
    write_text((fs::path(dir) / "constants.json").string(), dump(doc));
  } catch (IoError const &e) {
    err << "I/O error: " << e.what() << "\n";
    return exit_io;
  }
  for (auto const &[k, v] : doc["constants"].items()) { out << k << " = " << v.dump() << "\n"; }
  return exit_ok;
}

int cmd_report(std::string const &in_dir, std::string const &out_dir, std::ostream &out, std::ostream &err)
{
  if (!fs::is_directory(in_dir)) {
    err << "usage error: " << in_dir << " is not a directory\n";
    return exit_config;
  }
  std::string const dest = resolve_output_dir(out_dir.empty() ? in_dir : out_dir);
  bool found = false;
  try {
    make_dir(dest);
    fs::path const csv = fs::path(in_dir) / "diagnostics.csv";
    if (fs::exists(csv)) {
      found = true;
      Trajectory const traj = read_diagnostics_csv(csv.string());
      std::string dat = "# t E D Dh V2 crit resid\n";
      Real sup_crit = 0, max_resid = 0;
      for (auto const &r : traj) {
        sup_crit = std::max(sup_crit, r.crit);
        max_resid = std::max(max_resid, std::abs(r.resid));
        for (Real v : {r.t, r.E, r.D, r.Dh, r.V2, r.crit, r.resid}) { dat += format_real(v) + " "; }
        dat.back() = '\n';
      }
      write_text((fs::path(dest) / "diagnostics.dat").string(), dat);
      out << "diagnostics: " << traj.size() << " samples";
      if (!traj.empty()) {
        out << ", t in [" << format_real(traj.front().t) << ", " << format_real(traj.back().t) << "], E "
            << fmt("%.6e", traj.front().E) << " -> " << fmt("%.6e", traj.back().E);
      }
      out << ", sup crit " << fmt("%.6e", sup_crit) << ", max |resid| " << fmt("%.3e", max_resid) << "\n";
    }
    fs::path const bounds = fs::path(in_dir) / "bounds.json";
    if (fs::exists(bounds)) {
      found = true;
      json const doc = json::parse(read_text(bounds.string()));
      out << "bounds (all hold: " << (doc.value("all_hold", false) ? "yes" : "no") << ")\n";
      std::string dat = "# name measured bound min_constant violation_fraction\n";
      for (auto const &r : doc["reports"]) {
        char line[200];
        std::snprintf(line, sizeof line, "  %-32s measured=%-14.6g bound=%-14.6g violations=%ld/%ld %s\n",
                      r["name"].get<std::string>().c_str(), read_num(r["measured"]), read_num(r["bound"]),
                      r["violations"].get<long>(), r["samples"].get<long>(), r["holds"].get<bool>() ? "ok" : "FAIL");
        out << line;
        dat += r["name"].get<std::string>() + " " + format_real(read_num(r["measured"])) + " " +
               format_real(read_num(r["bound"])) + " " + format_real(read_num(r["min_constant"])) + " " +
               format_real(read_num(r["violation_fraction"])) + "\n";
      }
      write_text((fs::path(dest) / "bounds.dat").string(), dat);
    }
    std::vector<fs::path> verify;
    for (auto const &e : fs::directory_iterator(in_dir)) {
      std::string const n = e.path().filename().string();
      if (n.rfind("verify_", 0) == 0 && e.path().extension() == ".json") { verify.push_back(e.path()); }
    }
    std::sort(verify.begin(), verify.end());
    for (auto const &p : verify) {
      found = true;
      json const doc = json::parse(read_text(p.string()));
      out << p.filename().string() << " (hard failures: " << doc["hard_failures"].get<long>() << ")\n";
      std::string dat = "# id sample ratio\n";
      for (auto const &r : doc["reports"]) {
        char line[200];
        std::snprintf(line, sizeof line, "  %-32s n=%-5ld ratio=%-14.8g C=%-14.8g violations=%ld\n",
                      r["id"].get<std::string>().c_str(), r["count"].get<long>(), read_num(r["extreme_ratio"]),
                      read_num(r["calibrated_C"]), r["violations"].get<long>());
        out << line;
        long i = 0;
        for (auto const &e : r["entries"]) {
          Real const rhs = read_num(e["rhs_factor"]);
          dat += r["id"].get<std::string>() + " " + std::to_string(i++) + " " +
                 format_real(rhs > 0 ? read_num(e["lhs"]) / rhs : NAN) + "\n";
        }
      }
      write_text((fs::path(dest) / (p.stem().string() + ".dat")).string(), dat);
    }
    fs::path const constants = fs::path(in_dir) / "constants.json";
    if (fs::exists(constants)) {
      found = true;
      json const doc = json::parse(read_text(constants.string()));
      out << "constants (" << doc.value("suite", "?") << ")\n";
      for (auto const &[k, v] : doc["constants"].items()) { out << "  " << k << " = " << v.dump() << "\n"; }
    }
  } catch (IoError const &e) {
    err << "I/O error: " << e.what() << "\n";
    return exit_io;
  } catch (json::exception const &e) {
    err << "malformed artifact: " << e.what() << "\n";
    return exit_io;
  } catch (ConfigError const &e) {
    err << "malformed artifact: " << e.what() << "\n";
    return exit_io;
  }
  if (!found) {
    err << "usage error: no chanreg artifacts in " << in_dir << "\n";
    return exit_config;
  }
  return exit_ok;
}

} // namespace chanreg
