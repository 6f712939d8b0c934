#pragma once

// JSON scenario configuration. Physics parameters live in the file; the
// command line only chooses paths. Every validation failure names the
// offending field so it can be reported as machine-readable JSON.

#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bsosim/model.hpp"

namespace bsosim {

using json = nlohmann::json;

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }
  json to_json() const {
    return json{{"error", "config"}, {"field", field_}, {"message", what()}};
  }

 private:
  std::string field_;
};

enum class Scenario {
  rabi,
  rabi_dc,
  gbso_scan,
  arbitrary_init,
  lambda,
  composite_2l,
  raman_compare,
  analytic
};

inline const std::vector<std::pair<std::string, Scenario>>& scenario_names() {
  static const std::vector<std::pair<std::string, Scenario>> names{
      {"rabi", Scenario::rabi},
      {"rabi_dc", Scenario::rabi_dc},
      {"gbso_scan", Scenario::gbso_scan},
      {"arbitrary_init", Scenario::arbitrary_init},
      {"lambda", Scenario::lambda},
      {"composite_2l", Scenario::composite_2l},
      {"raman_compare", Scenario::raman_compare},
      {"analytic", Scenario::analytic}};
  return names;
}

inline std::string to_string(Scenario s) {
  for (const auto& [n, v] : scenario_names())
    if (v == s) return n;
  return "?";
}

// How the evolution end time is given.
struct EndTime {
  enum Kind { fixed, pi_half, rabi_periods } kind = fixed;
  double value = 0.0;
};

struct TauGrid {
  // Either explicit values, a uniform range, or the harmonic-analysis grid
  // anchored at a drive ratio.
  std::vector<double> values;
  std::optional<double> lo, hi, step;
  std::optional<double> ratio;
  int periods = 32;
  int per_period = 8;
};

struct CompositeParams {
  double alpha2 = 400.0;  // mean photon number
  double g = 0.025;       // vacuum coupling
  double k = 7.0;         // window half-width in units of |alpha|
  std::optional<double> atom_freq;
  bool export_hamiltonian = false;
};

struct RamanParams {
  std::vector<double> omega_ratios{10.0, 30.0, 100.0};
  double delta_omega = 1.0;
  double rabi = 1.0;
  double kappa = 0.2;  // single-photon detuning as a fraction of omega
};

struct LambdaParams {
  LambdaConfig cfg;
  bool cross_coupling = false;
};

struct ScenarioConfig {
  json raw;  // resolved input, kept for the manifest
  Scenario scenario = Scenario::rabi;
  DriveField field;
  EndTime t_end;
  std::optional<double> dt;
  int steps_per_cycle = 40;
  double A0 = 0.0;
  int init_level = 0;
  std::optional<int> ladder_order;
  std::optional<TauGrid> tau_grid;
  std::optional<LambdaParams> lambda;
  std::optional<CompositeParams> composite;
  std::optional<RamanParams> raman;
  std::string output_dir = "out";
  unsigned jobs = 1;
};

namespace detail {

inline const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, path + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, path + " must be finite");
  return v;
}

inline double required_number(const json& obj, const char* key,
                              const std::string& prefix = "") {
  const std::string path = prefix + key;
  const json* v = find(obj, key);
  if (!v) throw ConfigError(path, "missing required field '" + path + "'");
  return number(*v, path);
}

inline std::optional<double> optional_number(const json& obj, const char* key,
                                             const std::string& prefix = "") {
  const json* v = find(obj, key);
  if (!v || v->is_null()) return std::nullopt;
  return number(*v, prefix + key);
}

inline int integer(const json& obj, const char* key, int fallback,
                   const std::string& prefix = "") {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer())
    throw ConfigError(prefix + key, prefix + key + " must be an integer");
  return v->get<int>();
}

inline bool boolean(const json& obj, const char* key, bool fallback,
                    const std::string& prefix = "") {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean())
    throw ConfigError(prefix + key, prefix + key + " must be true or false");
  return v->get<bool>();
}

inline void check(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) throw ConfigError(field, msg);
}

// g0M is optional where the run derives it (the observation-time scan).
inline DriveField parse_field(const json& j, bool need_g0M = true) {
  DriveField f;
  f.omega = required_number(j, "omega");
  f.g0M = need_g0M ? required_number(j, "g0M")
                   : optional_number(j, "g0M").value_or(0.0);
  f.phi = optional_number(j, "phi").value_or(0.0);
  if (const json* ts = find(j, "tau_sw"); ts && ts->is_string()) {
    check(*ts == "adiabatic", "tau_sw", "tau_sw must be a number or \"adiabatic\"");
    f.tau_sw = 10.0 / f.omega;
  } else {
    f.tau_sw = optional_number(j, "tau_sw").value_or(0.0);
  }
  f.g_dc = optional_number(j, "g_dc").value_or(0.0);
  f.epsilon = optional_number(j, "epsilon");
  check(f.omega > 0.0, "omega", "omega must be > 0");
  check(f.g0M >= 0.0, "g0M", "g0M must be >= 0");
  check(f.tau_sw >= 0.0, "tau_sw", "tau_sw must be >= 0");
  return f;
}

inline EndTime parse_end(const json& j) {
  EndTime e;
  const json* v = find(j, "t_end");
  if (!v) throw ConfigError("t_end", "missing required field 't_end'");
  if (v->is_string()) {
    check(*v == "pi_half", "t_end", "t_end must be a number, \"pi_half\" or {\"rabi_periods\": k}");
    e.kind = EndTime::pi_half;
  } else if (v->is_object()) {
    e.kind = EndTime::rabi_periods;
    e.value = required_number(*v, "rabi_periods", "t_end.");
    check(e.value > 0.0, "t_end.rabi_periods", "t_end.rabi_periods must be > 0");
  } else {
    e.value = number(*v, "t_end");
    check(e.value > 0.0, "t_end", "t_end must be > 0");
  }
  return e;
}

inline TauGrid parse_tau_grid(const json& v) {
  TauGrid g;
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i)
      g.values.push_back(number(v[i], "tau_grid[" + std::to_string(i) + "]"));
    check(!g.values.empty(), "tau_grid", "tau_grid must not be empty");
    for (std::size_t i = 1; i < g.values.size(); ++i)
      check(g.values[i] > g.values[i - 1], "tau_grid",
            "tau_grid must be strictly increasing");
    check(g.values.front() > 0.0, "tau_grid", "tau_grid values must be > 0");
    return g;
  }
  check(v.is_object(), "tau_grid", "tau_grid must be an array or an object");
  g.ratio = optional_number(v, "ratio", "tau_grid.");
  if (g.ratio) {
    check(*g.ratio > 0.0, "tau_grid.ratio", "tau_grid.ratio must be > 0");
    g.periods = integer(v, "periods", g.periods, "tau_grid.");
    g.per_period = integer(v, "per_period", g.per_period, "tau_grid.");
    check(g.periods > 0, "tau_grid.periods", "tau_grid.periods must be > 0");
    check(g.per_period > 0, "tau_grid.per_period", "tau_grid.per_period must be > 0");
    return g;
  }
  g.lo = required_number(v, "lo", "tau_grid.");
  g.hi = required_number(v, "hi", "tau_grid.");
  g.step = required_number(v, "step", "tau_grid.");
  check(*g.lo > 0.0, "tau_grid.lo", "tau_grid.lo must be > 0");
  check(*g.hi >= *g.lo, "tau_grid.hi", "tau_grid.hi must be >= tau_grid.lo");
  check(*g.step > 0.0, "tau_grid.step", "tau_grid.step must be > 0");
  return g;
}

inline LambdaParams parse_lambda(const json& v) {
  check(v.is_object(), "lambda", "lambda must be an object");
  LambdaParams p;
  p.cfg.omega01 = required_number(v, "omega01", "lambda.");
  p.cfg.omega12 = required_number(v, "omega12", "lambda.");
  p.cfg.delta = required_number(v, "delta", "lambda.");
  p.cfg.g = required_number(v, "g", "lambda.");
  p.cfg.phi1 = optional_number(v, "phi1", "lambda.").value_or(0.0);
  p.cfg.phi2 = optional_number(v, "phi2", "lambda.").value_or(0.0);
  p.cross_coupling = boolean(v, "cross_coupling", false, "lambda.");
  check(p.cfg.omega01 > 0.0, "lambda.omega01", "lambda.omega01 must be > 0");
  check(p.cfg.omega12 > 0.0, "lambda.omega12", "lambda.omega12 must be > 0");
  check(p.cfg.g >= 0.0, "lambda.g", "lambda.g must be >= 0");
  check(p.cfg.nu1() > 0.0 && p.cfg.nu2() > 0.0, "lambda.delta",
        "lambda.delta makes a drive frequency non-positive");
  return p;
}

inline CompositeParams parse_composite(const json& v) {
  check(v.is_object(), "composite", "composite must be an object");
  CompositeParams p;
  p.alpha2 = optional_number(v, "alpha2", "composite.").value_or(p.alpha2);
  p.g = optional_number(v, "g", "composite.").value_or(p.g);
  p.k = optional_number(v, "k", "composite.").value_or(p.k);
  p.atom_freq = optional_number(v, "atom_freq", "composite.");
  p.export_hamiltonian = boolean(v, "export_hamiltonian", false, "composite.");
  check(p.alpha2 >= 0.0, "composite.alpha2", "composite.alpha2 must be >= 0");
  check(p.g >= 0.0, "composite.g", "composite.g must be >= 0");
  check(p.k > 0.0, "composite.k", "composite.k must be > 0");
  return p;
}

inline RamanParams parse_raman(const json& v) {
  check(v.is_object(), "raman", "raman must be an object");
  RamanParams p;
  if (const json* r = find(v, "omega_ratios")) {
    check(r->is_array() && !r->empty(), "raman.omega_ratios",
          "raman.omega_ratios must be a non-empty array");
    p.omega_ratios.clear();
    for (std::size_t i = 0; i < r->size(); ++i) {
      const std::string path = "raman.omega_ratios[" + std::to_string(i) + "]";
      p.omega_ratios.push_back(number((*r)[i], path));
      check(p.omega_ratios.back() > 1.0, path, path + " must be > 1");
    }
  }
  p.delta_omega = optional_number(v, "delta_omega", "raman.").value_or(p.delta_omega);
  p.rabi = optional_number(v, "rabi", "raman.").value_or(p.rabi);
  p.kappa = optional_number(v, "kappa", "raman.").value_or(p.kappa);
  check(p.delta_omega > 0.0, "raman.delta_omega", "raman.delta_omega must be > 0");
  check(p.rabi > 0.0, "raman.rabi", "raman.rabi must be > 0");
  check(p.kappa > 0.0, "raman.kappa", "raman.kappa must be > 0");
  return p;
}

}  // namespace detail

/// Parses and validates a scenario; throws ConfigError.
inline ScenarioConfig parse_config(const json& j) {
  using namespace detail;
  if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
  ScenarioConfig c;
  c.raw = j;

  const json* sc = find(j, "scenario");
  if (!sc) throw ConfigError("scenario", "missing required field 'scenario'");
  bool known = false;
  if (sc->is_string())
    for (const auto& [name, v] : scenario_names())
      if (*sc == name) {
        c.scenario = v;
        known = true;
      }
  if (!known) {
    std::string all;
    for (const auto& [name, v] : scenario_names()) all += (all.empty() ? "" : ", ") + name;
    throw ConfigError("scenario", "scenario must be one of: " + all);
  }

  if (const json* o = find(j, "output_dir")) {
    check(o->is_string(), "output_dir", "output_dir must be a string");
    c.output_dir = o->get<std::string>();
  }
  c.dt = optional_number(j, "dt");
  if (c.dt) check(*c.dt > 0.0, "dt", "dt must be > 0");
  c.steps_per_cycle = integer(j, "steps_per_cycle", 40);
  check(c.steps_per_cycle >= 8, "steps_per_cycle", "steps_per_cycle must be >= 8");
  const int jobs = integer(j, "jobs", 1);
  check(jobs >= 1, "jobs", "jobs must be >= 1");
  c.jobs = static_cast<unsigned>(jobs);

  switch (c.scenario) {
    case Scenario::rabi:
    case Scenario::rabi_dc:
    case Scenario::analytic:
    case Scenario::arbitrary_init:
      c.field = parse_field(j);
      c.t_end = parse_end(j);
      if (c.t_end.kind != EndTime::fixed)
        check(c.field.g0M > 0.0, "g0M", "g0M must be > 0 for an area-based t_end");
      break;
    case Scenario::gbso_scan:
      c.field = parse_field(j, false);
      break;
    case Scenario::lambda:
      c.t_end = parse_end(j);
      check(c.t_end.kind == EndTime::fixed, "t_end",
            "lambda scenario needs a numeric t_end");
      break;
    case Scenario::composite_2l:
      // The equivalent classical drive follows from the field state.
      c.field.omega = required_number(j, "omega");
      check(c.field.omega > 0.0, "omega", "omega must be > 0");
      c.t_end = parse_end(j);
      break;
    case Scenario::raman_compare:
      break;
  }

  if (c.scenario == Scenario::rabi_dc)
    check(c.field.g_dc != 0.0, "g_dc", "rabi_dc needs a non-zero g_dc");
  if (c.scenario == Scenario::arbitrary_init || find(j, "A0")) {
    c.A0 = required_number(j, "A0");
    check(c.A0 >= 0.0 && c.A0 <= 1.0, "A0", "A0 must lie in [0, 1]");
  }
  if (const json* v = find(j, "init_level")) {
    c.init_level = integer(j, "init_level", 0);
    check(c.init_level == 0 || c.init_level == 1 ||
              (c.scenario == Scenario::lambda && c.init_level == 2),
          "init_level", "init_level out of range");
    (void)v;
  }
  if (find(j, "ladder_order")) {
    c.ladder_order = integer(j, "ladder_order", 0);
    check(*c.ladder_order >= 0 && *c.ladder_order <= 64, "ladder_order",
          "ladder_order must lie in [0, 64]");
  }
  if (const json* v = find(j, "tau_grid")) c.tau_grid = parse_tau_grid(*v);
  if (c.scenario == Scenario::gbso_scan && !c.tau_grid)
    throw ConfigError("tau_grid", "missing required field 'tau_grid'");
  if (const json* v = find(j, "lambda")) c.lambda = parse_lambda(*v);
  if (c.scenario == Scenario::lambda && !c.lambda)
    throw ConfigError("lambda", "missing required field 'lambda'");
  if (const json* v = find(j, "composite")) c.composite = parse_composite(*v);
  if (c.scenario == Scenario::composite_2l) {
    if (!c.composite) c.composite = CompositeParams{};
    // Coupling g (a + a^dagger) with real alpha acts as -g_eff cos(omega t + pi).
    c.field.g0M = 2.0 * c.composite->g * std::sqrt(c.composite->alpha2);
    c.field.phi = pi;
    c.field.tau_sw = 0.0;
    c.field.epsilon = c.composite->atom_freq;
    if (c.t_end.kind != EndTime::fixed)
      check(c.field.g0M > 0.0, "composite.g", "area-based t_end needs a non-zero coupling");
  }
  if (const json* v = find(j, "raman")) c.raman = parse_raman(*v);
  if (c.scenario == Scenario::raman_compare && !c.raman) c.raman = RamanParams{};
  return c;
}

inline json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("", "cannot open config file " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
}

/// Converts "a.b.c" to a JSON pointer and checks it names a numeric leaf.
inline json::json_pointer numeric_leaf(const json& j, const std::string& dotted) {
  if (dotted.empty()) throw ConfigError("", "sweep parameter name is empty");
  std::string ptr;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    ptr += "/" + dotted.substr(start, dot - start);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  const json::json_pointer p(ptr);
  if (!j.contains(p))
    throw ConfigError(dotted, "sweep parameter '" + dotted + "' is not in the config");
  if (!j.at(p).is_number())
    throw ConfigError(dotted, "sweep parameter '" + dotted + "' is not numeric");
  return p;
}

}  // namespace bsosim
