#include <algorithm>
#include <atomic>
#include <cstdio>
#include <set>
#include <thread>

#include "averseek/harness.hpp"

namespace averseek::harness {

bool SweepResult::all_ok() const {
  for (const auto& r : rows) {
    if (!r.ok) return false;
  }
  return true;
}

namespace {

std::vector<double> axis(const json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) throw ConfigError("grid axis '" + key + "' must be a non-empty array");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(x.get<double>());
  return out;
}

// Scalar numeric metrics, flattened with dotted names.
void flatten(const json& j, const std::string& prefix, std::map<std::string, double>& out) {
  for (const auto& [k, v] : j.items()) {
    const std::string name = prefix.empty() ? k : prefix + "." + k;
    if (v.is_number()) {
      out[name] = v.get<double>();
    } else if (v.is_object()) {
      flatten(v, name, out);
    } else if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i].is_number()) out[name + "." + std::to_string(i)] = v[i].get<double>();
      }
    }
  }
}

}  // namespace

SweepResult sweep(const ScenarioConfig& base, const json& grid, const fs::path& out_dir,
                  unsigned jobs) {
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  try {
    if (!grid.is_object()) throw ConfigError("grid must be a JSON object");
    for (const auto& [k, _] : grid.items()) {
      if (k != "parameters" && k != "horizon") throw ConfigError("unknown key '" + k + "' in grid");
    }
    if (grid.contains("parameters")) {
      if (!grid.at("parameters").is_object()) throw ConfigError("grid.parameters must be an object");
      for (const auto& [k, v] : grid.at("parameters").items()) axes.emplace_back(k, axis(v, k));
    }
    if (grid.contains("horizon")) axes.emplace_back("horizon", axis(grid.at("horizon"), "horizon"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed grid: ") + e.what());
  }
  if (axes.empty()) throw ConfigError("parameter grid is empty");
  std::sort(axes.begin(), axes.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  // Cartesian product, last axis fastest.
  std::vector<std::map<std::string, double>> points(1);
  for (const auto& [key, values] : axes) {
    std::vector<std::map<std::string, double>> next;
    for (const auto& p : points) {
      for (double v : values) {
        auto q = p;
        q[key] = v;
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }

  std::vector<ScenarioConfig> cfgs;
  for (std::size_t i = 0; i < points.size(); ++i) {
    ScenarioConfig c = base;
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "_row%03zu", i);
    c.name = base.name + suffix;
    for (const auto& [k, v] : points[i]) {
      if (k == "horizon") {
        c.horizon = v;
      } else {
        c.parameters[k] = v;
      }
    }
    c.validate();
    cfgs.push_back(std::move(c));
  }

  SweepResult res;
  res.rows.resize(cfgs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cfgs.size();) {
      SweepRow& row = res.rows[i];
      row.point = points[i];
      try {
        row.summary = run_scenario(cfgs[i], out_dir).summary;
        row.ok = true;
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(cfgs.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < n; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Table assembled in grid order.
  std::vector<std::map<std::string, double>> metrics(res.rows.size());
  std::set<std::string> metric_names;
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    if (!res.rows[i].ok) continue;
    flatten(res.rows[i].summary.at("metrics"), "", metrics[i]);
    for (const auto& [k, _] : metrics[i]) metric_names.insert(k);
  }
  std::string table = "row";
  for (const auto& [k, _] : axes) table += "," + k;
  table += ",status";
  for (const auto& m : metric_names) table += "," + m;
  table += "\n";
  json all = json::array();
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const auto& r = res.rows[i];
    table += std::to_string(i);
    for (const auto& [k, _] : axes) table += "," + format_number(r.point.at(k));
    table += r.ok ? ",ok" : ",failed";
    for (const auto& m : metric_names) {
      table += ",";
      if (auto it = metrics[i].find(m); it != metrics[i].end()) table += format_number(it->second);
    }
    table += "\n";
    json entry = {{"row", i}, {"point", r.point}, {"ok", r.ok}};
    if (r.ok) {
      entry["metrics"] = r.summary.at("metrics");
    } else {
      entry["error"] = r.error;
    }
    all.push_back(std::move(entry));
  }
  res.table = out_dir / (base.name + "_sweep.csv");
  write_file_atomic(res.table, table);
  write_file_atomic(out_dir / (base.name + "_sweep.json"), all.dump(2) + "\n");
  return res;
}

}  // namespace averseek::harness
