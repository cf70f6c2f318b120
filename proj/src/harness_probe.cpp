#include <set>

#include "averseek/classical.hpp"
#include "averseek/harness.hpp"

namespace averseek::harness {

ProbeConfig ProbeConfig::from_json(const json& j) {
  try {
    if (!j.is_object()) throw ConfigError("probe config must be a JSON object");
    static const std::set<std::string> allowed{"schema_version", "family", "a",     "target",
                                               "r",              "delta",  "eps_list", "seed",
                                               "jobs",           "horizon", "hysteresis"};
    for (const auto& [k, _] : j.items()) {
      if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in probe config");
    }
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != schema_version) {
      throw ConfigError("probe config needs schema_version 1");
    }
    ProbeConfig c;
    c.family = j.value("family", std::string("classical"));
    if (c.family != "classical" && c.family != "source") {
      throw ConfigError("probe family must be 'classical' or 'source'");
    }
    c.a = j.value("a", c.family == "classical" ? 0.7 : 1.0);
    if (j.contains("target")) c.target = j.at("target").get<std::vector<double>>();
    c.settings.r = j.at("r").get<double>();
    c.settings.delta = j.at("delta").get<double>();
    c.settings.eps_list = j.at("eps_list").get<std::vector<double>>();
    c.settings.seed = j.value("seed", std::uint64_t{1});
    c.settings.jobs = j.value("jobs", 1u);
    c.settings.hysteresis = j.value("hysteresis", 0.1);
    c.horizon = j.value("horizon", 0.0);

    if (!(c.a > 0)) throw ConfigError("a must be positive");
    if (!(c.settings.r > 0) || !(c.settings.delta > 0)) throw ConfigError("r and delta must be positive");
    if (c.settings.eps_list.empty()) throw ConfigError("eps_list must not be empty");
    for (std::size_t i = 0; i < c.settings.eps_list.size(); ++i) {
      if (!(c.settings.eps_list[i] > 0) ||
          (i > 0 && !(c.settings.eps_list[i] < c.settings.eps_list[i - 1]))) {
        throw ConfigError("eps_list must be positive and strictly decreasing");
      }
    }
    if (c.horizon < 0) throw ConfigError("horizon must be non-negative");
    if (!(c.settings.hysteresis >= 0)) throw ConfigError("hysteresis must be non-negative");
    const std::size_t dim = c.family == "classical" ? 1 : 2;
    if (c.target && c.target->size() != dim) throw ConfigError("target has the wrong dimension");
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed probe config: ") + e.what());
  }
}

json probe_report_json(const stability::SgpuasReport& r) {
  json table = json::array();
  for (const auto& e : r.table) {
    json runs = json::array();
    for (const auto& run : e.runs) {
      json jr = {{"sample", run.sample},
                 {"t0", run.t0},
                 {"passed", run.passed},
                 {"entry_time", run.entry_time},
                 {"final_distance", run.final_distance}};
      if (!run.failure.empty()) jr["failure"] = run.failure;
      runs.push_back(std::move(jr));
    }
    table.push_back({{"eps", e.eps}, {"passed", e.passed}, {"failures", e.failures}, {"runs", runs}});
  }
  json j = {{"r", r.r}, {"delta", r.delta}, {"table", table}, {"warnings", r.warnings}};
  j["eps_passed"] = r.eps_passed ? json(*r.eps_passed) : json(nullptr);
  j["envelope"] = r.envelope ? json{{"C", r.envelope->C}, {"lambda", r.envelope->lambda}} : json(nullptr);
  return j;
}

stability::SgpuasReport run_probe(const ProbeConfig& cfg, const fs::path& out_dir) {
  stability::ProbeFamily fam;
  if (cfg.family == "classical") {
    const double target = cfg.target ? (*cfg.target)[0] : classical::demo_psi_bar_argmax(cfg.a);
    fam = cfg.horizon > 0 ? stability::classical_probe_family(cfg.a, target, cfg.horizon)
                          : stability::classical_probe_family(cfg.a, target);
  } else {
    const Vec2 target = cfg.target ? Vec2{(*cfg.target)[0], (*cfg.target)[1]} : Vec2{0, 0};
    fam = cfg.horizon > 0 ? stability::source_probe_family(cfg.a, target, cfg.horizon)
                          : stability::source_probe_family(cfg.a, target);
  }
  auto rep = stability::sgpuas_probe(fam, cfg.settings);
  json j = probe_report_json(rep);
  j["family"] = cfg.family;
  j["a"] = cfg.a;
  j["seed"] = cfg.settings.seed;
  write_file_atomic(out_dir / ("probe_" + cfg.family + ".json"), j.dump(2) + "\n");
  return rep;
}

}  // namespace averseek::harness
