#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>

#include "averseek/classical.hpp"
#include "averseek/harness.hpp"
#include "averseek/source.hpp"
#include "averseek/stability.hpp"

namespace averseek::harness {

std::string format_number(double v) {
  if (!std::isfinite(v)) {
    throw ode::IntegrationError(ode::IntegrationError::Kind::non_finite, 0,
                                "refusing to write a non-finite value");
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  static std::atomic<unsigned long> counter{0};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string csv_text(const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  std::string s;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) s += ',';
    s += header[i];
  }
  s += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) s += ',';
      s += format_number(row[i]);
    }
    s += '\n';
  }
  return s;
}

namespace {

using classical::AveragedObjective1D;
using source::SourceParams;
using source::SourceState;

struct Run {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  json metrics = json::object();
  json identity = json::object();
  std::size_t native_samples = 0;
};

std::vector<double> initial_or(const ScenarioConfig& c, std::vector<double> fallback) {
  if (c.initial_state.empty()) return fallback;
  if (c.initial_state.size() != fallback.size()) {
    throw ConfigError("initial_state for scheme " + std::string(to_string(c.scheme)) + " needs " +
                      std::to_string(fallback.size()) + " entries");
  }
  return c.initial_state;
}

double mean_over(const ode::Trajectory& tr, std::size_t comp, double t0, double t1) {
  constexpr std::size_t n = 512;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = t0 + (t1 - t0) * static_cast<double>(i) / n;
  const auto r = ode::resample(tr, grid);
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += r.state(i)[comp];
  return s / n;
}

json classical_identity(double a) {
  const AveragedObjective1D obj(classical::demo_psi, a, classical::ScalarFn(classical::demo_dpsi));
  std::vector<double> grid;
  for (int i = 0; i <= 400; ++i) grid.push_back(-2 + 0.01 * i);
  const auto fit = classical::gradient_identity_residual(obj, grid);
  double closed = 0;
  for (double th : grid) {
    closed = std::max(closed, std::abs(classical::demo_psi_bar_closed_form(a, th) - obj.psi_bar(th)));
  }
  return {{"a", a},
          {"gradient_identity_max_residual", classical::gradient_identity_max_residual(obj, grid)},
          {"gradient_identity_C_fit", fit.C_fit},
          {"closed_form_max_residual", closed}};
}

json source_identity(const source::AveragedObjective2D& obj) {
  std::vector<Vec2> grid;
  for (int i = 0; i <= 8; ++i) {
    for (int j = 0; j <= 8; ++j) grid.push_back({-10 + 2.5 * i, -10 + 2.5 * j});
  }
  const Vec2 zero = quad::boundary_flux([](Vec2) { return 1.0; }, {0, 0}, obj.boundary(), obj.c());
  return {{"divergence_identity_max_residual", source::divergence_identity_residual(obj, grid)},
          {"constant_flux_norm", norm(zero)}};
}

Run run_classical(const ScenarioConfig& c, bool decay) {
  classical::ClassicalGains g;
  g.eps = c.param("eps");
  g.a = c.param("a");
  g.omega_H = c.param("omega_H");
  g.omega_L = c.param("omega_L");
  g.K = c.param("K");
  const auto plant = classical::demo_plant();
  const auto x0 = initial_or(
      c, classical::demo_initial_state(plant, c.param("theta0"), {0.0, 0.0}, g.a).pack(decay));

  const double ts = c.t0 / g.eps, te = (c.t0 + c.horizon) / g.eps;
  const auto traj = ode::integrate(classical::make_closed_loop(plant, g, decay), x0, ts, te, c.integrator);
  const auto out = ode::resample(traj, ode::uniform_grid(ts, te, c.output_samples));

  Run r;
  r.native_samples = traj.size();
  r.columns = {"t", "tau", "x1", "x2", "theta_hat", "xi", "eta"};
  if (decay) r.columns.push_back("a");
  r.columns.insert(r.columns.end(), {"y", "psi_bar"});
  const auto rule = quad::gauss_chebyshev2_rule(64);
  const std::size_t ti = classical::theta_index(plant);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto s = out.state(i);
    std::vector<double> row{out.time(i), g.eps * out.time(i)};
    row.insert(row.end(), s.begin(), s.end());
    const double a = decay ? s[classical::amplitude_index(plant)] : g.a;
    row.push_back(plant.h(s.first(2)));
    row.push_back(quad::semicircle_average(classical::demo_psi, s[ti], a, rule));
    r.rows.push_back(std::move(row));
  }

  const double period = 2 * std::numbers::pi / g.eps;
  const double target = decay ? classical::demo_psi_bar_argmax(1e-9)
                              : classical::demo_psi_bar_argmax(g.a);
  const double theta_end = traj.back_state()[ti];
  r.metrics["terminal_theta_hat"] = theta_end;
  r.metrics["final_period_mean_theta_hat"] = mean_over(traj, ti, std::max(ts, te - period), te);
  r.metrics["target_theta"] = target;
  r.metrics["distance_to_target"] = std::abs(theta_end - target);
  if (decay) r.metrics["terminal_amplitude"] = traj.back_state()[classical::amplitude_index(plant)];

  if (c.compare_averaged) {
    const AveragedObjective1D obj(classical::demo_psi, g.a, classical::ScalarFn(classical::demo_dpsi));
    const std::vector<double> y0{x0[ti], g.K * x0[ti + 1], x0[ti + 2]};
    const auto avg = ode::integrate(classical::make_averaged(obj, g), y0, c.t0, c.t0 + c.horizon,
                                    c.integrator);
    std::vector<double> taus(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) taus[i] = g.eps * out.time(i);
    taus.front() = c.t0;
    taus.back() = c.t0 + c.horizon;
    const auto ar = ode::resample(avg, taus);
    double gap = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      gap = std::max(gap, std::abs(out.state(i)[ti] - ar.state(i)[0]));
    }
    r.metrics["averaged_gap"] = gap;
  }
  r.identity = classical_identity(g.a);
  return r;
}

Run run_averaged_classical(const ScenarioConfig& c) {
  classical::ClassicalGains g;
  g.a = c.param("a");
  g.omega_H = c.param("omega_H");
  g.omega_L = c.param("omega_L");
  g.K = c.param("K");
  const AveragedObjective1D obj(classical::demo_psi, g.a, classical::ScalarFn(classical::demo_dpsi));
  const double th0 = c.param("theta0");
  const auto x0 = initial_or(c, {th0, 0.0, obj.z(th0)});
  const auto traj = ode::integrate(classical::make_averaged(obj, g), x0, c.t0, c.t0 + c.horizon,
                                   c.integrator);
  const auto out = ode::resample(traj, ode::uniform_grid(c.t0, c.t0 + c.horizon, c.output_samples));
  Run r;
  r.native_samples = traj.size();
  r.columns = {"tau", "theta", "theta_dot", "eta", "psi_bar", "G"};
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto s = out.state(i);
    r.rows.push_back({out.time(i), s[0], s[1], s[2], obj.psi_bar(s[0]), obj.G(s[0])});
  }
  const double target = classical::demo_psi_bar_argmax(g.a);
  r.metrics["terminal_theta"] = traj.back_state()[0];
  r.metrics["target_theta"] = target;
  r.metrics["distance_to_target"] = std::abs(traj.back_state()[0] - target);
  r.identity = classical_identity(g.a);
  return r;
}

struct SourceSetup {
  SourceParams p;
  source::DitherBoundary b;
  double radius;  // effective disk radius
};

SourceSetup source_setup(const ScenarioConfig& c) {
  SourceSetup s;
  s.p.m = c.param("m");
  s.p.kappa = c.param("kappa");
  s.p.c = c.param("c");
  s.p.omega_H = c.param("omega_H");
  s.p.eps = c.param("eps");
  s.p.mu = c.parameters.count("mu") ? c.parameters.at("mu") : s.p.m;
  s.radius = c.param("a");
  s.b = source::circle_boundary(s.radius);
  if (s.p.mu != s.p.m) {
    // The assumed-mass loop is the known-mass loop on a rescaled disk.
    const auto rc = source::rescale_for_unknown_mass(s.p, s.b);
    s.b = rc.boundary;
    s.p.c = rc.c;
    s.radius *= s.p.mu / s.p.m;
    s.p.mu = s.p.m;
  }
  return s;
}

Run run_source(const ScenarioConfig& c, bool transformed) {
  const auto S = source_setup(c);
  const auto& p = S.p;
  const auto& b = S.b;
  const auto x0 = initial_or(c, {-9, 7, 0, 0, 0});
  const double ts = c.t0, te = c.t0 + c.horizon;
  const auto grid = ode::uniform_grid(ts, te, c.output_samples);

  // Dense access to the physical and transformed states at any time.
  std::optional<ode::Trajectory> traj;
  if (transformed) {
    const auto xt0 = source::to_transformed(SourceState::unpack(x0), p, b, ts).pack();
    traj = ode::integrate(source::make_transformed(source::demo_signal, p, b), xt0, ts, te, c.integrator);
  } else {
    traj = ode::integrate(source::make_closed_loop(source::demo_signal, p, b), x0, ts, te, c.integrator);
  }
  auto both_at = [&](const ode::Trajectory& r, std::size_t i) {
    const auto st = SourceState::unpack(r.state(i));
    if (transformed) return std::pair{source::from_transformed(st, p, b, r.time(i)), st};
    return std::pair{st, source::to_transformed(st, p, b, r.time(i))};
  };

  const auto out = ode::resample(*traj, grid);
  Run r;
  r.native_samples = traj->size();
  r.columns = {"t", "q1", "q2", "q1_dot", "q2_dot", "eta", "qt1", "qt2", "qt1_dot", "qt2_dot", "y"};
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto [ph, tr] = both_at(out, i);
    r.rows.push_back({out.time(i), ph.q.x, ph.q.y, ph.q_dot.x, ph.q_dot.y, ph.eta, tr.q.x, tr.q.y,
                      tr.q_dot.x, tr.q_dot.y, source::demo_signal(ph.q)});
  }

  const double period = b.period * p.eps;
  constexpr std::size_t n = 512;
  std::vector<double> last(n);
  const double w0 = std::max(ts, te - period);
  for (std::size_t i = 0; i < n; ++i) last[i] = w0 + (te - w0) * static_cast<double>(i) / n;
  const auto lr = ode::resample(*traj, last);
  Vec2 mean{};
  double max_r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 q = both_at(lr, i).first.q;
    mean += q / static_cast<double>(n);
    max_r = std::max(max_r, norm(q));
  }
  max_r = std::max(max_r, norm(both_at(*traj, traj->size() - 1).first.q));
  const auto init = both_at(*traj, 0).second;
  const double vnorm = norm(init.q_dot);
  r.metrics["period_mean_q"] = {mean.x, mean.y};
  r.metrics["period_mean_radius"] = norm(mean);
  r.metrics["final_period_max_radius"] = max_r;
  r.metrics["initial_transformed_velocity"] = {init.q_dot.x, init.q_dot.y};
  if (vnorm > 0) r.metrics["initial_drift_direction"] = {init.q_dot.x / vnorm, init.q_dot.y / vnorm};
  r.metrics["effective_radius"] = S.radius;

  const auto obj = source::disk_objective(source::demo_signal, S.radius, p.c);
  if (c.compare_averaged) {
    const auto avg = ode::integrate(source::make_averaged(obj, p), init.pack(), ts, te, c.integrator);
    const auto ar = ode::resample(avg, grid);
    double gap = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto tr = both_at(out, i).second;
      gap = std::max(gap, norm(tr.q - Vec2{ar.state(i)[0], ar.state(i)[1]}));
    }
    r.metrics["averaged_gap"] = gap;
  }
  if (std::find(c.outputs.begin(), c.outputs.end(), "identity-report") != c.outputs.end()) {
    r.identity = source_identity(obj);
  }
  return r;
}

Run run_averaged_source(const ScenarioConfig& c) {
  const auto S = source_setup(c);
  const auto obj = source::disk_objective(source::demo_signal, S.radius, S.p.c);
  const auto fallback =
      source::to_transformed(SourceState{{-9, 7}, {0, 0}, 0}, S.p, S.b, c.t0).pack();
  const auto x0 = initial_or(c, fallback);
  const double ts = c.t0, te = c.t0 + c.horizon;
  const auto traj = ode::integrate(source::make_averaged(obj, S.p), x0, ts, te, c.integrator);
  const auto out = ode::resample(traj, ode::uniform_grid(ts, te, c.output_samples));
  Run r;
  r.native_samples = traj.size();
  r.columns = {"t", "q1", "q2", "q1_dot", "q2_dot", "eta", "psi_bar"};
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto s = out.state(i);
    r.rows.push_back({out.time(i), s[0], s[1], s[2], s[3], s[4], obj.psi_bar({s[0], s[1]})});
  }
  const auto e = traj.back_state();
  r.metrics["terminal_q"] = {e[0], e[1]};
  r.metrics["terminal_radius"] = norm(Vec2{e[0], e[1]});
  if (std::find(c.outputs.begin(), c.outputs.end(), "identity-report") != c.outputs.end()) {
    r.identity = source_identity(obj);
  }
  return r;
}

Run run_lyapunov(const ScenarioConfig& c) {
  stability::LyapunovSystem sys;
  std::vector<double> fallback;
  if (c.potential == "quadratic") {
    const std::size_t n = c.initial_state.empty() ? 1 : c.initial_state.size() / 2;
    if (!c.initial_state.empty() && c.initial_state.size() % 2 != 0) {
      throw ConfigError("lyapunov initial_state must have even length [x, v]");
    }
    sys.n = static_cast<int>(n);
    sys.k = c.param("k");
    sys.V = [](std::span<const double> x) {
      double s = 0;
      for (double v : x) s += v * v;
      return 0.5 * s;
    };
    sys.grad_V = [](std::span<const double> x) { return std::vector<double>(x.begin(), x.end()); };
    sys.x_star.assign(n, 0.0);
    sys.C_radius = c.parameters.count("C_radius") ? c.parameters.at("C_radius") : 0.0;
    fallback.assign(2 * n, 0.0);
    fallback[0] = 1;
  } else if (c.potential == "classical-demo") {
    classical::ClassicalGains g;
    g.a = c.param("a");
    g.omega_L = c.param("omega_L");
    g.K = c.param("K");
    const AveragedObjective1D obj(classical::demo_psi, g.a, classical::ScalarFn(classical::demo_dpsi));
    const double C = c.parameters.count("C_radius") ? c.parameters.at("C_radius") : 1.0;
    sys = stability::classical_instance(obj, g, classical::demo_psi_bar_argmax(g.a), C);
    fallback = {-1, 0};
  } else {
    SourceParams p;
    p.m = c.param("m");
    p.kappa = c.param("kappa");
    p.c = c.param("c");
    const auto obj = source::disk_objective(source::demo_signal, c.param("a"), p.c);
    const double C = c.parameters.count("C_radius") ? c.parameters.at("C_radius") : 6.0;
    sys = stability::source_instance(obj, p, {0, 0}, C);
    fallback = {-9, 7, 0, 0};
  }
  const auto x0 = initial_or(c, fallback);
  const double ts = c.t0, te = c.t0 + c.horizon;
  const auto traj = ode::integrate(stability::make_rhs(sys), x0, ts, te, c.integrator);
  const auto out = ode::resample(traj, ode::uniform_grid(ts, te, c.output_samples));
  const auto n = static_cast<std::size_t>(sys.n);
  Run r;
  r.native_samples = traj.size();
  r.columns = {"t"};
  for (std::size_t i = 0; i < n; ++i) r.columns.push_back("x" + std::to_string(i + 1));
  for (std::size_t i = 0; i < n; ++i) r.columns.push_back("v" + std::to_string(i + 1));
  r.columns.insert(r.columns.end(), {"E", "B"});
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto s = out.state(i);
    std::vector<double> row{out.time(i)};
    row.insert(row.end(), s.begin(), s.end());
    row.push_back(stability::energy(sys, s.first(n), s.subspan(n, n)));
    row.push_back(stability::b_function(sys, s.first(n), s.subspan(n, n)));
    r.rows.push_back(std::move(row));
  }
  const auto d = stability::check_dissipation(sys, traj);
  r.metrics["terminal_energy"] = r.rows.back()[1 + 2 * n];
  r.metrics["terminal_B"] = r.rows.back()[2 + 2 * n];
  r.identity = {{"max_E_mismatch", d.max_E_mismatch},
                {"max_B_mismatch", d.max_B_mismatch},
                {"max_E_rate", d.max_E_rate},
                {"max_B_rate_outside", d.max_B_rate_outside},
                {"max_B_excess_outside", d.max_B_excess_outside}};
  r.metrics["dissipation"] = r.identity;
  return r;
}

bool wants(const ScenarioConfig& c, const char* what) {
  return std::find(c.outputs.begin(), c.outputs.end(), what) != c.outputs.end();
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  Run run;
  switch (cfg.scheme) {
    case Scheme::classical: run = run_classical(cfg, false); break;
    case Scheme::classical_decay: run = run_classical(cfg, true); break;
    case Scheme::source: run = run_source(cfg, false); break;
    case Scheme::source_transformed: run = run_source(cfg, true); break;
    case Scheme::averaged_classical: run = run_averaged_classical(cfg); break;
    case Scheme::averaged_source: run = run_averaged_source(cfg); break;
    case Scheme::lyapunov: run = run_lyapunov(cfg); break;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ScenarioResult res;
  res.name = cfg.name;
  res.columns = run.columns;
  res.rows = std::move(run.rows);
  json terminal = json::object();
  for (std::size_t i = 0; i < res.columns.size(); ++i) terminal[res.columns[i]] = res.rows.back()[i];
  res.summary = {{"name", cfg.name},
                 {"scheme", to_string(cfg.scheme)},
                 {"config", cfg.to_json()},
                 {"terminal", terminal},
                 {"metrics", run.metrics},
                 {"output_samples", res.rows.size()},
                 {"native_samples", run.native_samples},
                 {"wall_time_s", wall}};
  if (!run.identity.empty()) res.summary["identity"] = run.identity;

  // Serialize before touching the file system so numerical failures leave no partial files.
  std::string csv;
  if (wants(cfg, "trajectory-csv")) csv = csv_text(res.columns, res.rows);
  if (wants(cfg, "trajectory-csv")) {
    res.artifacts.push_back(out_dir / (cfg.name + ".csv"));
    write_file_atomic(res.artifacts.back(), csv);
  }
  if (wants(cfg, "summary-json")) {
    res.artifacts.push_back(out_dir / (cfg.name + "_summary.json"));
    write_file_atomic(res.artifacts.back(), res.summary.dump(2) + "\n");
  }
  if (wants(cfg, "identity-report")) {
    res.artifacts.push_back(out_dir / (cfg.name + "_identity.json"));
    write_file_atomic(res.artifacts.back(), run.identity.dump(2) + "\n");
  }
  return res;
}

}  // namespace averseek::harness
