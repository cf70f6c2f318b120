#include <fstream>
#include <set>
#include <sstream>

#include "averseek/harness.hpp"

namespace averseek::harness {

namespace {

struct SchemeInfo {
  Scheme scheme;
  const char* name;
  std::set<std::string> allowed;
  std::set<std::string> required;
  std::map<std::string, double> defaults;
};

const std::vector<SchemeInfo>& schemes() {
  static const std::vector<SchemeInfo> table = {
      {Scheme::classical,
       "classical",
       {"eps", "a", "omega_H", "omega_L", "K", "theta0"},
       {"eps", "a"},
       {{"omega_H", 1}, {"omega_L", 1}, {"K", 1}, {"theta0", -1}}},
      {Scheme::classical_decay,
       "classical-decay",
       {"eps", "a", "omega_H", "omega_L", "K", "theta0"},
       {"eps"},
       {{"a", 1}, {"omega_H", 1}, {"omega_L", 1}, {"K", 1}, {"theta0", -1}}},
      {Scheme::source,
       "source",
       {"m", "kappa", "c", "omega_H", "eps", "a", "mu"},
       {"eps", "a"},
       {{"m", 1}, {"kappa", 1}, {"c", 1}, {"omega_H", 1}}},
      {Scheme::source_transformed,
       "source-transformed",
       {"m", "kappa", "c", "omega_H", "eps", "a", "mu"},
       {"eps", "a"},
       {{"m", 1}, {"kappa", 1}, {"c", 1}, {"omega_H", 1}}},
      {Scheme::averaged_classical,
       "averaged-classical",
       {"a", "omega_H", "omega_L", "K", "theta0"},
       {"a"},
       {{"omega_H", 1}, {"omega_L", 1}, {"K", 1}, {"theta0", -1}}},
      {Scheme::averaged_source,
       "averaged-source",
       {"m", "kappa", "c", "omega_H", "eps", "a"},
       {"a"},
       {{"m", 1}, {"kappa", 1}, {"c", 1}, {"omega_H", 1}, {"eps", 0.1}}},
      {Scheme::lyapunov,
       "lyapunov",
       {"k", "a", "m", "kappa", "c", "omega_L", "K", "C_radius"},
       {},
       {{"k", 1}, {"m", 1}, {"kappa", 1}, {"c", 1}, {"omega_L", 1}, {"K", 1}}},
  };
  return table;
}

const SchemeInfo& info(Scheme s) {
  for (const auto& i : schemes()) {
    if (i.scheme == s) return i;
  }
  throw ConfigError("unknown scheme");
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

ode::IntegratorConfig integrator_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("integrator must be an object");
  reject_unknown(j, {"mode", "dt", "rtol", "atol", "max_steps", "max_abs_state"}, "integrator");
  ode::IntegratorConfig c = ode::IntegratorConfig::adaptive_tol(1e-6);
  if (j.contains("mode")) {
    const auto m = j.at("mode").get<std::string>();
    if (m == "adaptive") {
      c.mode = ode::Mode::adaptive;
    } else if (m == "fixed") {
      c.mode = ode::Mode::fixed_step;
    } else {
      throw ConfigError("integrator.mode must be 'adaptive' or 'fixed'");
    }
  }
  if (j.contains("dt")) c.dt = j.at("dt").get<double>();
  if (j.contains("rtol")) c.rtol = j.at("rtol").get<double>();
  if (j.contains("atol")) c.atol = j.at("atol").get<double>();
  if (j.contains("max_steps")) {
    const double v = j.at("max_steps").get<double>();
    if (!(v >= 1) || v != std::floor(v)) throw ConfigError("integrator.max_steps must be a positive integer");
    c.max_steps = static_cast<std::size_t>(v);
  }
  if (j.contains("max_abs_state")) c.max_abs_state = j.at("max_abs_state").get<double>();
  return c;
}

}  // namespace

const char* to_string(Scheme s) { return info(s).name; }

Scheme parse_scheme(const std::string& s) {
  for (const auto& i : schemes()) {
    if (s == i.name) return i.scheme;
  }
  throw ConfigError("unknown scheme '" + s + "'");
}

double ScenarioConfig::param(const std::string& key) const {
  if (auto it = parameters.find(key); it != parameters.end()) return it->second;
  const auto& d = info(scheme).defaults;
  if (auto it = d.find(key); it != d.end()) return it->second;
  throw ConfigError("missing parameter '" + key + "' for scheme " + to_string(scheme));
}

void ScenarioConfig::validate() const {
  const auto& i = info(scheme);
  for (const auto& [k, v] : parameters) {
    if (!i.allowed.count(k)) {
      throw ConfigError("parameter '" + k + "' is not used by scheme " + std::string(i.name));
    }
    if (!std::isfinite(v)) throw ConfigError("parameter '" + k + "' is not finite");
  }
  for (const auto& k : i.required) {
    if (!parameters.count(k)) throw ConfigError("scheme " + std::string(i.name) + " requires '" + k + "'");
  }
  for (const auto& [k, v] : parameters) {
    if (k != "theta0" && !(v > 0)) throw ConfigError("parameter '" + k + "' must be positive");
  }
  if (!(horizon > 0) || !std::isfinite(horizon)) throw ConfigError("horizon must be positive");
  if (!std::isfinite(t0)) throw ConfigError("t0 must be finite");
  if (output_samples < 2) throw ConfigError("output_samples must be at least 2");
  for (double x : initial_state) {
    if (!std::isfinite(x)) throw ConfigError("initial_state must be finite");
  }
  for (const auto& o : outputs) {
    if (o != "trajectory-csv" && o != "summary-json" && o != "identity-report") {
      throw ConfigError("unknown output '" + o + "'");
    }
  }
  if (scheme == Scheme::lyapunov && potential != "quadratic" && potential != "classical-demo" &&
      potential != "source-demo") {
    throw ConfigError("potential must be quadratic, classical-demo or source-demo");
  }
  if (scheme != Scheme::lyapunov && potential != "quadratic") {
    throw ConfigError("potential applies to the lyapunov scheme only");
  }
  if (compare_averaged && scheme != Scheme::classical && scheme != Scheme::source &&
      scheme != Scheme::source_transformed) {
    throw ConfigError("compare_averaged needs scheme classical, source or source-transformed");
  }
  try {
    integrator.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("integrator: ") + e.what());
  }
}

json ScenarioConfig::to_json() const {
  json j;
  j["schema_version"] = schema_version;
  j["name"] = name;
  j["scheme"] = to_string(scheme);
  j["parameters"] = parameters;
  if (scheme == Scheme::lyapunov) j["potential"] = potential;
  if (!initial_state.empty()) j["initial_state"] = initial_state;
  j["t0"] = t0;
  j["horizon"] = horizon;
  json in;
  in["mode"] = integrator.mode == ode::Mode::adaptive ? "adaptive" : "fixed";
  in["dt"] = integrator.dt;
  in["rtol"] = integrator.rtol;
  in["atol"] = integrator.atol;
  in["max_steps"] = integrator.max_steps;
  if (std::isfinite(integrator.max_abs_state)) in["max_abs_state"] = integrator.max_abs_state;
  j["integrator"] = in;
  j["outputs"] = outputs;
  j["output_samples"] = output_samples;
  j["compare_averaged"] = compare_averaged;
  j["seed"] = seed;
  return j;
}

ScenarioConfig ScenarioConfig::from_json(const json& j) {
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(j,
                   {"schema_version", "name", "scheme", "parameters", "potential", "initial_state",
                    "t0", "horizon", "integrator", "outputs", "output_samples", "compare_averaged",
                    "seed"},
                   "config");
    if (!j.contains("schema_version")) throw ConfigError("missing schema_version");
    if (j.at("schema_version").get<int>() != schema_version) {
      throw ConfigError("unsupported schema_version (expected 1)");
    }
    if (!j.contains("scheme")) throw ConfigError("missing scheme");
    if (!j.contains("horizon")) throw ConfigError("missing horizon");

    ScenarioConfig c;
    c.scheme = parse_scheme(j.at("scheme").get<std::string>());
    c.name = j.value("name", std::string(to_string(c.scheme)));
    if (j.contains("parameters")) {
      if (!j.at("parameters").is_object()) throw ConfigError("parameters must be an object");
      for (const auto& [k, v] : j.at("parameters").items()) c.parameters[k] = v.get<double>();
    }
    if (j.contains("potential")) c.potential = j.at("potential").get<std::string>();
    if (j.contains("initial_state")) c.initial_state = j.at("initial_state").get<std::vector<double>>();
    c.t0 = j.value("t0", 0.0);
    c.horizon = j.at("horizon").get<double>();
    if (j.contains("integrator")) c.integrator = integrator_from_json(j.at("integrator"));
    if (j.contains("outputs")) c.outputs = j.at("outputs").get<std::vector<std::string>>();
    if (j.contains("output_samples")) {
      const double n = j.at("output_samples").get<double>();
      if (!(n >= 2) || n != std::floor(n)) throw ConfigError("output_samples must be an integer >= 2");
      c.output_samples = static_cast<std::size_t>(n);
    }
    c.compare_averaged = j.value("compare_averaged", false);
    c.seed = j.value("seed", std::uint64_t{0});
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

ScenarioConfig load_config(const fs::path& path) { return ScenarioConfig::from_json(load_json(path)); }

const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids{"fig2a", "fig2b", "fig3", "fig4-center", "fig4-right"};
  return ids;
}

ScenarioConfig builtin_scenario(const std::string& id) {
  ScenarioConfig c;
  c.name = id;
  if (id == "fig2a" || id == "fig2b") {
    c.scheme = Scheme::classical;
    c.parameters = {{"eps", 0.01}, {"a", id == "fig2a" ? 0.4 : 0.7}, {"omega_H", 1},
                    {"omega_L", 1},  {"K", 1},                         {"theta0", -1}};
    c.horizon = 150;
    c.output_samples = 3001;
  } else if (id == "fig3") {
    c.scheme = Scheme::classical_decay;
    c.parameters = {{"eps", 0.01}, {"a", 1}, {"omega_H", 1}, {"omega_L", 1}, {"K", 1}, {"theta0", -1}};
    c.horizon = 150;
    c.output_samples = 3001;
  } else if (id == "fig4-center" || id == "fig4-right") {
    c.scheme = Scheme::source_transformed;
    c.parameters = {{"m", 1},   {"kappa", 1}, {"c", 1},
                    {"omega_H", 1}, {"eps", 0.1}, {"a", id == "fig4-center" ? 0.5 : 1.0}};
    c.initial_state = {-9, 7, 0, 0, 0};
    c.horizon = 60;
    c.output_samples = 12001;
  } else {
    throw ConfigError("unknown figure id '" + id + "'");
  }
  c.validate();
  return c;
}

fs::path resolve_out_dir(const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("AVERSEEK_OUT"); env && *env) return env;
  return "averseek_out";
}

}  // namespace averseek::harness
