#include "chanreg/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace chanreg {

using nlohmann::json;

namespace {

struct Key
{
  std::string name;
  std::vector<std::string> aliases; // only used to suggest `name` for a misspelling
  std::function<void(json const &, std::string const &)> read;
  std::function<json()> write;
};

std::string where(std::string const &section, std::string const &key) { return section + "." + key; }

[[noreturn]] void fail(std::string const &field, std::string const &what) { throw ConfigError(field + ": " + what); }

std::string shown(Real v)
{
  std::ostringstream s;
  s << v;
  return s.str();
}

Real number(json const &v, std::string const &field)
{
  if (!v.is_number()) { fail(field, "expected a number"); }
  Real const x = v.get<Real>();
  if (!std::isfinite(x)) { fail(field, "must be finite"); }
  return x;
}

long integer(json const &v, std::string const &field)
{
  if (!v.is_number_integer()) { fail(field, "expected an integer"); }
  return v.get<long>();
}

Key real_key(std::string name, Real &ref, std::function<bool(Real)> ok, std::string rule,
             std::vector<std::string> aliases = {})
{
  return {name, std::move(aliases),
          [&ref, ok, rule](json const &v, std::string const &field) {
            Real const x = number(v, field);
            if (!ok(x)) { fail(field, rule + " (got " + shown(x) + ")"); }
            ref = x;
          },
          [&ref] { return json(ref); }};
}

template <typename I>
Key int_key(std::string name, I &ref, long lo, long hi, std::vector<std::string> aliases = {})
{
  return {name, std::move(aliases),
          [&ref, lo, hi](json const &v, std::string const &field) {
            long const x = integer(v, field);
            if (x < lo || x > hi) {
              fail(field, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "] (got " +
                            std::to_string(x) + ")");
            }
            ref = static_cast<I>(x);
          },
          [&ref] { return json(ref); }};
}

Key seed_key(std::string name, std::uint64_t &ref)
{
  return {name,
          {"random_seed", "rng_seed"},
          [&ref](json const &v, std::string const &field) {
            if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long>() >= 0)) {
              fail(field, "expected a nonnegative integer");
            }
            ref = v.get<std::uint64_t>();
          },
          [&ref] { return json(ref); }};
}

Key bool_key(std::string name, bool &ref)
{
  return {name,
          {},
          [&ref](json const &v, std::string const &field) {
            if (!v.is_boolean()) { fail(field, "expected true or false"); }
            ref = v.get<bool>();
          },
          [&ref] { return json(ref); }};
}

Key string_key(std::string name, std::string &ref, std::vector<std::string> choices = {},
               std::vector<std::string> aliases = {})
{
  return {name, std::move(aliases),
          [&ref, choices](json const &v, std::string const &field) {
            if (!v.is_string()) { fail(field, "expected a string"); }
            std::string const s = v.get<std::string>();
            if (!choices.empty() && std::find(choices.begin(), choices.end(), s) == choices.end()) {
              std::string list;
              for (auto const &c : choices) { list += (list.empty() ? "" : ", ") + c; }
              fail(field, "must be one of " + list + " (got \"" + s + "\")");
            }
            ref = s;
          },
          [&ref] { return json(ref); }};
}

struct Section
{
  std::string name;
  std::vector<Key> keys;
  std::vector<std::string> required;
};

auto positive = [](Real x) { return x > 0; };
auto nonnegative = [](Real x) { return x >= 0; };

std::vector<Section> schema(RunConfig &c)
{
  return {
    {"grid",
     {int_key("nx", c.grid.nx, 4, 4096), int_key("ny", c.grid.ny, 4, 4096), int_key("nz", c.grid.nz, 5, 1025),
      real_key("px", c.grid.px, positive, "must be > 0", {"length_x", "lx"}),
      real_key("py", c.grid.py, positive, "must be > 0", {"length_y", "ly"}),
      real_key("L", c.grid.L, positive, "must be > 0", {"half_height", "height"})},
     {}},
    {"solver",
     {real_key("nu", c.solver.nu, positive, "must be > 0", {"viscosity", "kinematic_viscosity"}),
      real_key("dt", c.solver.dt, positive, "must be > 0", {"time_step", "timestep"}),
      real_key("T", c.solver.T, positive, "must be > 0", {"t_end", "end_time", "final_time"}),
      int_key("order", c.solver.order, 1, 2, {"scheme", "scheme_order"}), bool_key("dealias", c.solver.dealias),
      real_key("cfl_safety", c.solver.cfl_safety, positive, "must be > 0", {"cfl"}),
      bool_key("adaptive", c.solver.adaptive), seed_key("seed", c.solver.seed)},
     {"nu", "T"}},
    {"initial",
     {string_key("type", c.initial.type, {"zero", "shear", "perturbed_shear", "random", "checkpoint"}, {"kind"}),
      int_key("mode", c.initial.mode, 1, 64), real_key("amplitude", c.initial.amplitude, nonnegative, "must be >= 0"),
      real_key("perturbation", c.initial.perturbation, nonnegative, "must be >= 0"),
      real_key("decay", c.initial.decay, [](Real x) { return x > 1; }, "must be > 1"),
      int_key("horizontal_cap", c.initial.horizontal_cap, 0, 1024),
      int_key("vertical_cap", c.initial.vertical_cap, 0, 1024), string_key("path", c.initial.path)},
     {}},
    {"forcing",
     {string_key("type", c.forcing.type, {"none", "shear", "random", "checkpoint"}, {"kind"}),
      int_key("mode", c.forcing.mode, 1, 64), real_key("amplitude", c.forcing.amplitude, nonnegative, "must be >= 0"),
      real_key("modulation", c.forcing.modulation, [](Real x) { return std::abs(x) <= 1; }, "must satisfy |x| <= 1"),
      real_key("omega", c.forcing.omega, nonnegative, "must be >= 0", {"frequency"}), string_key("path", c.forcing.path)},
     {}},
    {"monitors",
     {bool_key("energy_budget", c.monitors.energy_budget), bool_key("decay_bounds", c.monitors.decay_bounds),
      bool_key("k1", c.monitors.k1), bool_key("diff_ineq", c.monitors.diff_ineq), bool_key("k2_k", c.monitors.k2_k)},
     {}},
    {"constants",
     {string_key("mode", c.constants.mode, {"unit", "user", "calibrated"}),
      real_key("value", c.constants.value, positive, "must be > 0"), string_key("path", c.constants.path)},
     {}},
    {"output",
     {string_key("dir", c.output.dir, {}, {"directory", "out"}), int_key("every", c.output.every, 1, 1L << 40, {"cadence"}),
      int_key("checkpoint_every", c.output.checkpoint_every, 0, 1L << 40)},
     {}},
  };
}

std::string suggestion(std::string const &bad, std::vector<std::pair<std::string, std::vector<std::string>>> const &known)
{
  std::string best;
  std::size_t best_d = std::string::npos;
  for (auto const &[name, aliases] : known) {
    std::vector<std::string> spellings = aliases;
    spellings.push_back(name);
    for (auto const &s : spellings) {
      std::size_t const d = edit_distance(bad, s);
      if (d < best_d) {
        best_d = d;
        best = name;
      }
    }
  }
  std::size_t const limit = std::max<std::size_t>(2, bad.size() / 3);
  return best_d <= limit ? best : std::string();
}

[[noreturn]] void unknown(std::string const &field, std::string const &bad,
                          std::vector<std::pair<std::string, std::vector<std::string>>> const &known)
{
  std::string msg = "unknown key \"" + bad + "\"";
  std::string const s = suggestion(bad, known);
  if (!s.empty()) { msg += "; did you mean \"" + s + "\"?"; }
  fail(field, msg);
}

void check_consistency(RunConfig const &c)
{
  if (c.grid.nx % 2 || c.grid.ny % 2) { fail("grid", "nx and ny must be even"); }
  if ((c.initial.type == "checkpoint") == c.initial.path.empty()) {
    fail("initial.path", "required exactly when initial.type is \"checkpoint\"");
  }
  if ((c.forcing.type == "checkpoint") == c.forcing.path.empty()) {
    fail("forcing.path", "required exactly when forcing.type is \"checkpoint\"");
  }
  if ((c.constants.mode == "calibrated") == c.constants.path.empty()) {
    fail("constants.path", "required exactly when constants.mode is \"calibrated\"");
  }
  if (c.output.checkpoint_every % c.output.every) {
    fail("output.checkpoint_every", "must be a multiple of output.every");
  }
  if (c.output.dir.empty()) { fail("output.dir", "must not be empty"); }
}

} // namespace

bool RunConfig::operator==(RunConfig const &o) const { return canonical_json(*this) == canonical_json(o); }

RunConfig parse_config(std::string const &text)
{
  json doc;
  try {
    doc = json::parse(text);
  } catch (json::parse_error const &e) {
    std::string const what = e.what();
    std::size_t const cut = what.find("parse error");
    throw ConfigError("config: JSON " + (cut == std::string::npos ? what : what.substr(cut)));
  }
  if (!doc.is_object()) { throw ConfigError("config: top level must be an object"); }

  RunConfig c;
  auto sections = schema(c);
  std::vector<std::pair<std::string, std::vector<std::string>>> section_names;
  for (auto const &s : sections) { section_names.push_back({s.name, {}}); }

  for (auto const &[name, value] : doc.items()) {
    auto const it = std::find_if(sections.begin(), sections.end(), [&](Section const &s) { return s.name == name; });
    if (it == sections.end()) {
      // A misspelled key at the top level may belong inside a section.
      std::vector<std::pair<std::string, std::vector<std::string>>> all = section_names;
      for (auto const &s : sections) {
        for (auto const &k : s.keys) { all.push_back({s.name + "." + k.name, k.aliases}); }
      }
      for (auto &entry : all) {
        auto const dot = entry.first.find('.');
        if (dot != std::string::npos) { entry.second.push_back(entry.first.substr(dot + 1)); }
      }
      unknown("config", name, all);
    }
    if (!value.is_object()) { fail(name, "expected an object"); }
  }

  for (auto &s : sections) {
    json const section = doc.contains(s.name) ? doc.at(s.name) : json::object();
    std::vector<std::pair<std::string, std::vector<std::string>>> known;
    for (auto const &k : s.keys) { known.push_back({k.name, k.aliases}); }
    for (auto const &[key, value] : section.items()) {
      auto const it = std::find_if(s.keys.begin(), s.keys.end(), [&](Key const &k) { return k.name == key; });
      if (it == s.keys.end()) { unknown(where(s.name, key), key, known); }
      it->read(value, where(s.name, key));
    }
    for (auto const &r : s.required) {
      if (!section.contains(r)) { fail(where(s.name, r), "required key is missing"); }
    }
  }
  check_consistency(c);
  return c;
}

RunConfig load_config(std::string const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw ConfigError(path + ": cannot open config file"); }
  std::ostringstream s;
  s << in.rdbuf();
  try {
    return parse_config(s.str());
  } catch (ConfigError const &e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string canonical_json(RunConfig const &cfg)
{
  RunConfig c = cfg;
  json doc = json::object();
  for (auto const &s : schema(c)) {
    json section = json::object();
    for (auto const &k : s.keys) { section[k.name] = k.write(); }
    doc[s.name] = section;
  }
  return doc.dump(2) + "\n";
}

std::uint64_t fnv1a(std::string const &text)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(RunConfig const &c)
{
  RunConfig h = c;
  h.output.dir.clear();
  return fnv1a(canonical_json(h));
}

std::string hex(std::uint64_t v)
{
  static char const digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) { s[static_cast<size_t>(i)] = digits[v & 15]; }
  return s;
}

std::size_t edit_distance(std::string const &a, std::string const &b)
{
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) { prev[j] = j; }
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t const sub = prev[j - 1] + (std::tolower(a[i - 1]) == std::tolower(b[j - 1]) ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

} // namespace chanreg
