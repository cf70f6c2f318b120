#ifndef AVERSEEK_HARNESS_HPP
#define AVERSEEK_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "averseek/ode.hpp"
#include "averseek/stability.hpp"

namespace averseek::harness {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numerical = 3 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scheme {
  classical,
  classical_decay,
  source,
  source_transformed,
  averaged_classical,
  averaged_source,
  lyapunov
};

const char* to_string(Scheme s);
Scheme parse_scheme(const std::string& s);

inline constexpr int schema_version = 1;

// One experiment. Classical schemes measure `horizon` in the dither time
// tau = eps t; every other scheme uses its own time variable.
struct ScenarioConfig {
  std::string name = "scenario";
  Scheme scheme = Scheme::classical;
  std::map<std::string, double> parameters;
  std::string potential = "quadratic";  // lyapunov scheme only
  std::vector<double> initial_state;    // empty: scheme default
  double t0 = 0;
  double horizon = 0;
  ode::IntegratorConfig integrator = ode::IntegratorConfig::adaptive_tol(1e-6);
  std::vector<std::string> outputs{"trajectory-csv", "summary-json"};
  std::size_t output_samples = 2001;
  bool compare_averaged = false;
  std::uint64_t seed = 0;

  double param(const std::string& key) const;
  // Throws ConfigError on any inconsistency.
  void validate() const;
  json to_json() const;
  static ScenarioConfig from_json(const json& j);
};

ScenarioConfig load_config(const fs::path& path);
json load_json(const fs::path& path);

const std::vector<std::string>& figure_ids();
// Hard-coded experimental setups, addressable by figure id.
ScenarioConfig builtin_scenario(const std::string& id);

struct ScenarioResult {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  json summary;
  std::vector<fs::path> artifacts;
};

ScenarioResult run_scenario(const ScenarioConfig& cfg, const fs::path& out_dir);

// Runs the built-in scenario and writes the averaged-objective grid next to it.
ScenarioResult reproduce_figure(const std::string& id, const fs::path& out_dir,
                                std::optional<double> tol = std::nullopt);

struct SweepRow {
  std::map<std::string, double> point;
  bool ok = false;
  std::string error;
  json summary;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  fs::path table;
  bool all_ok() const;
};

// grid: {"parameters": {"eps": [...], ...}} plus optional "horizon": [...].
// Cartesian product in sorted key order; rows run concurrently up to `jobs`.
SweepResult sweep(const ScenarioConfig& base, const json& grid, const fs::path& out_dir,
                  unsigned jobs);

struct Check {
  std::string name;
  double value = 0;
  double threshold = 0;
  bool passed = false;
};

struct VerifyReport {
  std::vector<Check> checks;
  bool passed() const;
};

VerifyReport verify(const fs::path& out_dir, double tol = 1e-9);

struct ProbeConfig {
  std::string family = "classical";
  double a = 0.7;
  std::optional<std::vector<double>> target;
  stability::ProbeSettings settings;
  double horizon = 0;  // 0: family default
  static ProbeConfig from_json(const json& j);
};

json probe_report_json(const stability::SgpuasReport& r);
stability::SgpuasReport run_probe(const ProbeConfig& cfg, const fs::path& out_dir);

// 17 significant digits, '.' separator.
std::string format_number(double v);
// Write to a temporary sibling and rename over the destination.
void write_file_atomic(const fs::path& path, const std::string& content);
std::string csv_text(const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

// --out, else AVERSEEK_OUT, else ./averseek_out.
fs::path resolve_out_dir(const std::optional<std::string>& flag);

}  // namespace averseek::harness

#endif  // AVERSEEK_HARNESS_HPP
