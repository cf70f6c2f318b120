#include "averseek/stability.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

namespace averseek::stability {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double sq_norm(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x * x;
  return s;
}

void check_dims(const LyapunovSystem& sys, std::span<const double> x, std::span<const double> v) {
  const auto n = static_cast<std::size_t>(sys.n);
  if (x.size() != n || v.size() != n || sys.x_star.size() != n) {
    throw std::invalid_argument("Lyapunov system: dimension mismatch");
  }
}

}  // namespace

void damped_gradient_rhs(const LyapunovSystem& sys, std::span<const double> s, std::span<double> ds) {
  const auto n = static_cast<std::size_t>(sys.n);
  const auto x = s.first(n);
  const auto v = s.subspan(n, n);
  const auto g = sys.grad_V(x);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(g[i])) {
      throw ode::IntegrationError(ode::IntegrationError::Kind::non_finite, 0,
                                  "non-finite potential gradient");
    }
    ds[i] = v[i];
    ds[n + i] = -sys.k * v[i] - g[i];
  }
}

ode::Rhs make_rhs(LyapunovSystem sys) {
  if (sys.n < 1 || !(sys.k > 0)) throw std::invalid_argument("Lyapunov system: need n >= 1, k > 0");
  return [sys = std::move(sys)](double, std::span<const double> x, std::span<double> dx) {
    damped_gradient_rhs(sys, x, dx);
  };
}

double energy(const LyapunovSystem& sys, std::span<const double> x, std::span<const double> v) {
  check_dims(sys, x, v);
  return 0.5 * sq_norm(v) + sys.V(x);
}

double b_function(const LyapunovSystem& sys, std::span<const double> x, std::span<const double> v) {
  check_dims(sys, x, v);
  const double k = sys.k, k2 = k * k;
  double quad = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = x[i] - sys.x_star[i];
    quad += k2 * e * e + 2 * k * e * v[i] + (1 + k2) * v[i] * v[i];
  }
  return (1 + k2) * (sys.V(x) - sys.V(sys.x_star)) + 0.5 * quad;
}

double energy_rate(const LyapunovSystem& sys, std::span<const double> x, std::span<const double> v) {
  check_dims(sys, x, v);
  return -sys.k * sq_norm(v);
}

double b_rate(const LyapunovSystem& sys, std::span<const double> x, std::span<const double> v) {
  check_dims(sys, x, v);
  const auto g = sys.grad_V(x);
  double gx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) gx += g[i] * (x[i] - sys.x_star[i]);
  return -sys.k * sys.k * sys.k * sq_norm(v) - sys.k * gx;
}

bool SystemCheck::ok(double tol) const {
  return std::abs(V_at_star) <= tol && grad_at_star <= std::sqrt(tol) && nonpositive_V.empty() &&
         vanishing_grad.empty();
}

SystemCheck check_system(const LyapunovSystem& sys, std::span<const std::vector<double>> samples,
                         double grad_tol) {
  SystemCheck c;
  c.V_at_star = sys.V(sys.x_star);
  c.grad_at_star = std::sqrt(sq_norm(sys.grad_V(sys.x_star)));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(sys.V(samples[i]) > 0)) c.nonpositive_V.push_back(i);
    if (!(std::sqrt(sq_norm(sys.grad_V(samples[i]))) > grad_tol)) c.vanishing_grad.push_back(i);
  }
  return c;
}

std::vector<double> fd_weights(std::span<const double> x, double z) {
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("fd_weights: need at least two nodes");
  // c[j][k]: weight of node j for the k-th derivative, k = 0, 1.
  std::vector<std::array<double, 2>> c(n, {0.0, 0.0});
  double c1 = 1, c4 = x[0] - z;
  c[0][0] = 1;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mn = std::min<std::size_t>(i, 1);
    double c2 = 1;
    const double c5 = c4;
    c4 = x[i] - z;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k) {
          c[i][k] = c1 * (static_cast<double>(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        }
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (std::size_t k = mn; k >= 1; --k) {
        c[j][k] = (c4 * c[j][k] - static_cast<double>(k) * c[j][k - 1]) / c3;
      }
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = c[j][1];
  return w;
}

DissipationReport check_dissipation(const LyapunovSystem& sys, const ode::Trajectory& traj) {
  const auto n = static_cast<std::size_t>(sys.n);
  if (traj.size() < 5) {
    throw std::invalid_argument("check_dissipation: trajectory too coarse (need >= 5 samples)");
  }
  if (traj.dimension() < 2 * n) throw std::invalid_argument("check_dissipation: state too short");

  const std::size_t N = traj.size();
  const double k = sys.k, k2 = k * k;
  const double V_star = sys.V(sys.x_star);
  std::vector<double> E(N), B(N), Edot(N), Bdot(N), dist(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto s = traj.state(i);
    const auto x = s.first(n), v = s.subspan(n, n);
    // One potential and one gradient evaluation per sample.
    const double Vx = sys.V(x);
    const auto g = sys.grad_V(x);
    double vv = 0, quad = 0, gx = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double e = x[j] - sys.x_star[j];
      vv += v[j] * v[j];
      quad += k2 * e * e + 2 * k * e * v[j] + (1 + k2) * v[j] * v[j];
      gx += g[j] * e;
    }
    E[i] = 0.5 * vv + Vx;
    B[i] = (1 + k2) * (Vx - V_star) + 0.5 * quad;
    Edot[i] = -k * vv;
    Bdot[i] = -k2 * k * vv - k * gx;
    dist[i] = std::sqrt(sq_dist(x, sys.x_star));
  }

  DissipationReport r;
  r.samples = N;
  r.max_E_rate = -std::numeric_limits<double>::infinity();
  r.max_B_rate_outside = -std::numeric_limits<double>::infinity();
  r.max_B_excess_outside = -std::numeric_limits<double>::infinity();
  const auto& t = traj.times();
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t lo = std::min(i >= 2 ? i - 2 : 0, N - 5);
    const auto w = fd_weights(std::span(t).subspan(lo, 5), t[i]);
    double dE = 0, dB = 0;
    for (std::size_t j = 0; j < 5; ++j) {
      dE += w[j] * E[lo + j];
      dB += w[j] * B[lo + j];
    }
    r.max_E_mismatch = std::max(r.max_E_mismatch, std::abs(dE - Edot[i]));
    r.max_B_mismatch = std::max(r.max_B_mismatch, std::abs(dB - Bdot[i]));
    r.max_E_rate = std::max(r.max_E_rate, dE);
    if (dist[i] > sys.C_radius) {
      r.max_B_rate_outside = std::max(r.max_B_rate_outside, dB);
      r.max_B_excess_outside = std::max(r.max_B_excess_outside, B[i] - B[0]);
    }
  }
  return r;
}

LyapunovSystem classical_instance(const classical::AveragedObjective1D& obj,
                                  const classical::ClassicalGains& g, double theta_star,
                                  double C_radius) {
  const double scale = g.K * g.omega_L;
  const double half_a2 = 0.5 * obj.a() * obj.a();
  const double top = obj.psi_bar(theta_star);
  LyapunovSystem sys;
  sys.n = 1;
  sys.k = g.omega_L;
  sys.V = [obj, scale, half_a2, top](std::span<const double> x) {
    return scale * half_a2 * (top - obj.psi_bar(x[0]));
  };
  sys.grad_V = [obj, scale](std::span<const double> x) {
    return std::vector<double>{-scale * obj.G(x[0])};
  };
  sys.x_star = {theta_star};
  sys.C_radius = C_radius;
  return sys;
}

LyapunovSystem source_instance(const source::AveragedObjective2D& obj,
                               const source::SourceParams& p, Vec2 q_star, double C_radius) {
  const double top = obj.psi_bar(q_star);
  LyapunovSystem sys;
  sys.n = 2;
  sys.k = p.kappa / p.m;
  sys.V = [obj, top, c = obj.c(), m = p.m](std::span<const double> x) {
    return (c / m) * (top - obj.psi_bar({x[0], x[1]}));
  };
  sys.grad_V = [obj, m = p.m](std::span<const double> x) {
    const Vec2 g = obj.G({x[0], x[1]});
    return std::vector<double>{-g.x / m, -g.y / m};
  };
  sys.x_star = {q_star.x, q_star.y};
  sys.C_radius = C_radius;
  return sys;
}

double KLEnvelope::operator()(double r, double t) const { return C * r * std::exp(-lambda * t); }

std::optional<KLEnvelope> fit_kl_envelope(std::span<const DecaySample> samples) {
  double n = 0, st = 0, sy = 0, stt = 0, sty = 0;
  for (const auto& s : samples) {
    if (!(s.r > 0) || !(s.d > 0)) continue;
    const double y = std::log(s.d / s.r);
    n += 1;
    st += s.t;
    sy += y;
    stt += s.t * s.t;
    sty += s.t * y;
  }
  const double den = n * stt - st * st;
  if (n < 2 || !(den > 0)) return std::nullopt;
  const double slope = (n * sty - st * sy) / den;
  const double intercept = (sy - slope * st) / n;
  if (!(slope < 0)) return std::nullopt;
  return KLEnvelope{std::max(1.0, std::exp(intercept)), -slope};
}

namespace {

// 53 random bits mapped to [0, 1).
double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

std::vector<double> gaussian_direction(std::mt19937_64& g, std::size_t dim) {
  // Box-Muller on the raw uniforms keeps the draws identical across standard libraries.
  std::vector<double> v(dim);
  for (;;) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double u1 = 1.0 - uniform01(g), u2 = uniform01(g);
      v[i] = std::sqrt(-2 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2);
    }
    const double nrm = std::sqrt(sq_norm(v));
    if (nrm > 1e-12) {
      for (double& x : v) x /= nrm;
      return v;
    }
  }
}

}  // namespace

std::vector<std::vector<double>> probe_offsets(std::size_t position_dim, double r,
                                               std::uint64_t seed) {
  if (position_dim < 1 || !(r > 0)) throw std::invalid_argument("probe_offsets: bad arguments");
  std::mt19937_64 gen(seed);
  std::vector<std::vector<double>> out;
  for (int i = 0; i < 8; ++i) {
    std::vector<double> o(2 * position_dim, 0.0);
    if (position_dim == 1) {
      o[0] = (i % 2 == 0 ? r : -r);
    } else {
      const auto d = gaussian_direction(gen, position_dim);
      for (std::size_t k = 0; k < position_dim; ++k) o[k] = r * d[k];
    }
    out.push_back(std::move(o));
  }
  for (int i = 0; i < 8; ++i) {
    auto d = gaussian_direction(gen, 2 * position_dim);
    const double rad = r * std::pow(uniform01(gen), 1.0 / static_cast<double>(2 * position_dim));
    for (double& x : d) x *= rad;
    out.push_back(std::move(d));
  }
  return out;
}

namespace {

struct Task {
  std::size_t eps_index;
  std::size_t sample;
  std::size_t phase;
};

struct TaskResult {
  ProbeRun run;
  std::vector<DecaySample> decay;
};

TaskResult run_one(const ProbeFamily& f, const ProbeSettings& s, double eps,
                   std::span<const double> offset, std::size_t sample, double t0) {
  TaskResult res;
  res.run.sample = sample;
  res.run.t0 = t0;
  try {
    const auto x0 = f.initial_state(offset, eps, t0);
    const auto traj = ode::integrate(f.rhs(eps), x0, t0, t0 + f.horizon(eps), f.integrator);
    std::vector<double> dist(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
      dist[i] = std::sqrt(sq_dist(f.observe(traj.state(i)), f.target));
    }
    const double outer = (1 + s.hysteresis) * s.delta;
    // The final stay starts after the last sample outside the widened ball.
    std::size_t start = 0;
    for (std::size_t i = traj.size(); i-- > 0;) {
      if (dist[i] > outer) {
        start = i + 1;
        break;
      }
    }
    std::size_t entry = traj.size();
    for (std::size_t i = start; i < traj.size(); ++i) {
      if (dist[i] <= s.delta) {
        entry = i;
        break;
      }
    }
    res.run.final_distance = dist.back();
    if (entry < traj.size()) {
      res.run.passed = true;
      res.run.entry_time = traj.time(entry);
    }
    std::size_t first_in = traj.size();
    for (std::size_t i = 0; i < traj.size(); ++i) {
      if (dist[i] <= s.delta) {
        first_in = i;
        break;
      }
    }
    const std::size_t stride = std::max<std::size_t>(1, first_in / 200);
    for (std::size_t i = 0; i < first_in; i += stride) {
      res.decay.push_back({dist[0], traj.time(i) - t0, dist[i]});
    }
  } catch (const ode::IntegrationError& e) {
    res.run.passed = false;
    res.run.failure = std::string(ode::to_string(e.kind())) + ": " + e.what();
  } catch (const std::exception& e) {
    res.run.passed = false;
    res.run.failure = e.what();
  }
  return res;
}

}  // namespace

SgpuasReport sgpuas_probe(const ProbeFamily& f, const ProbeSettings& s) {
  if (s.eps_list.empty()) throw std::invalid_argument("sgpuas_probe: empty eps list");
  for (std::size_t i = 0; i < s.eps_list.size(); ++i) {
    if (!(s.eps_list[i] > 0)) throw std::invalid_argument("sgpuas_probe: eps must be positive");
    if (i > 0 && !(s.eps_list[i] < s.eps_list[i - 1])) {
      throw std::invalid_argument("sgpuas_probe: eps list must be strictly decreasing");
    }
  }
  if (!(s.r > 0) || !(s.delta > 0)) throw std::invalid_argument("sgpuas_probe: r, delta > 0");

  const auto offsets = probe_offsets(f.position_dim, s.r, s.seed);
  std::vector<Task> tasks;
  for (std::size_t e = 0; e < s.eps_list.size(); ++e) {
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      for (std::size_t p = 0; p < 4; ++p) tasks.push_back({e, i, p});
    }
  }

  std::vector<TaskResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < tasks.size();) {
      const Task& t = tasks[k];
      const double eps = s.eps_list[t.eps_index];
      const double t0 = f.dither_period(eps) * static_cast<double>(t.phase) / 4.0;
      results[k] = run_one(f, s, eps, offsets[t.sample], t.sample, t0);
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(s.jobs, static_cast<unsigned>(tasks.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  SgpuasReport rep;
  rep.r = s.r;
  rep.delta = s.delta;
  std::vector<DecaySample> decay;
  std::size_t k = 0;
  for (std::size_t e = 0; e < s.eps_list.size(); ++e) {
    EpsResult er;
    er.eps = s.eps_list[e];
    for (std::size_t i = 0; i < offsets.size() * 4; ++i, ++k) {
      er.runs.push_back(results[k].run);
      if (!results[k].run.passed) ++er.failures;
      decay.insert(decay.end(), results[k].decay.begin(), results[k].decay.end());
    }
    er.passed = er.failures == 0;
    if (er.passed && !rep.eps_passed) rep.eps_passed = er.eps;
    rep.table.push_back(std::move(er));
  }
  for (std::size_t e = 0; e < rep.table.size(); ++e) {
    if (!rep.table[e].passed) continue;
    for (std::size_t j = e + 1; j < rep.table.size(); ++j) {
      if (!rep.table[j].passed) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "non-monotone: eps = %g passes but smaller eps = %g fails",
                      rep.table[e].eps, rep.table[j].eps);
        rep.warnings.emplace_back(buf);
      }
    }
  }
  rep.envelope = fit_kl_envelope(decay);
  return rep;
}

ProbeFamily classical_probe_family(double a, double theta_star, double horizon_tau) {
  ProbeFamily f;
  f.name = "classical";
  const classical::ClassicalPlant plant = classical::demo_plant();
  f.rhs = [plant, a](double eps) {
    classical::ClassicalGains g;
    g.eps = eps;
    g.a = a;
    return classical::make_time_scaled(plant, g);
  };
  f.initial_state = [plant, theta_star](std::span<const double> o, double, double) {
    // theta' = K xi in tau with K = 1
    const double theta = theta_star + o[0];
    auto s = classical::demo_initial_state(plant, theta, plant.l(theta), 0);
    s.xi = o[1];
    return s.pack(false);
  };
  const auto ti = classical::theta_index(plant);
  f.observe = [ti](std::span<const double> s) { return std::vector<double>{s[ti]}; };
  f.target = {theta_star};
  f.position_dim = 1;
  f.dither_period = [](double) { return 2 * std::numbers::pi; };
  f.horizon = [horizon_tau](double) { return horizon_tau; };
  f.integrator = ode::IntegratorConfig::adaptive_tol(1e-8);
  f.integrator.max_abs_state = 1e6;
  return f;
}

ProbeFamily source_probe_family(double a, Vec2 q_star, double horizon_t) {
  ProbeFamily f;
  f.name = "source";
  const source::DitherBoundary b = source::circle_boundary(a);
  f.rhs = [b](double eps) {
    source::SourceParams p;
    p.eps = eps;
    return source::make_transformed(source::demo_signal, p, b);
  };
  f.initial_state = [b, q_star](std::span<const double> o, double eps, double t0) {
    source::SourceParams p;
    p.eps = eps;
    source::TransformedState s{q_star + Vec2{o[0], o[1]}, {o[2], o[3]}, 0};
    s.eta = source::demo_signal(source::from_transformed(s, p, b, t0).q);
    return s.pack();
  };
  f.observe = [](std::span<const double> s) { return std::vector<double>{s[0], s[1]}; };
  f.target = {q_star.x, q_star.y};
  f.position_dim = 2;
  f.dither_period = [](double eps) { return 2 * std::numbers::pi * eps; };
  f.horizon = [horizon_t](double) { return horizon_t; };
  f.integrator = ode::IntegratorConfig::adaptive_tol(1e-8);
  f.integrator.max_abs_state = 1e6;
  return f;
}

}  // namespace averseek::stability
