#include "averseek/classical.hpp"
#include "averseek/harness.hpp"
#include "averseek/source.hpp"

namespace averseek::harness {

namespace {

void write_classical_objective(const fs::path& path, const std::vector<double>& radii) {
  std::vector<std::string> header{"theta", "psi"};
  std::vector<classical::AveragedObjective1D> objs;
  for (double a : radii) {
    header.push_back("psi_bar_" + format_number(a));
    objs.emplace_back(classical::demo_psi, a, classical::ScalarFn(classical::demo_dpsi));
  }
  std::vector<std::vector<double>> rows;
  for (int i = 0; i <= 400; ++i) {
    const double th = -2 + 0.01 * i;
    std::vector<double> row{th, classical::demo_psi(th)};
    for (const auto& o : objs) row.push_back(o.psi_bar(th));
    rows.push_back(std::move(row));
  }
  write_file_atomic(path, csv_text(header, rows));
}

void write_source_objective(const fs::path& path, double a) {
  const auto obj = source::disk_objective(source::demo_signal, a);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i <= 96; ++i) {
    for (int j = 0; j <= 96; ++j) {
      const Vec2 q{-12 + 0.25 * i, -12 + 0.25 * j};
      rows.push_back({q.x, q.y, source::demo_signal(q), obj.psi_bar(q)});
    }
  }
  write_file_atomic(path, csv_text({"q1", "q2", "psi", "psi_bar"}, rows));
}

}  // namespace

ScenarioResult reproduce_figure(const std::string& id, const fs::path& out_dir,
                                std::optional<double> tol) {
  auto cfg = builtin_scenario(id);
  if (tol) cfg.integrator.rtol = cfg.integrator.atol = *tol;
  auto res = run_scenario(cfg, out_dir);
  const fs::path grid = out_dir / (id + "_objective.csv");
  if (id == "fig2a" || id == "fig2b") {
    write_classical_objective(grid, {cfg.param("a")});
  } else if (id == "fig3") {
    write_classical_objective(grid, {1.0, 0.7, 0.4});
  } else {
    write_source_objective(grid, cfg.param("a"));
  }
  res.artifacts.push_back(grid);
  return res;
}

}  // namespace averseek::harness
