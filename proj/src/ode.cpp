#include "averseek/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace averseek::ode {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

class Evaluator {
 public:
  Evaluator(const Rhs& rhs, const IntegratorConfig& cfg) : rhs_(rhs), max_abs_(cfg.max_abs_state) {}

  void operator()(double t, std::span<const double> x, std::span<double> dx) const {
    rhs_(t, x, dx);
    if (!all_finite(dx)) {
      std::ostringstream msg;
      msg << "non-finite right-hand side at t = " << t;
      throw IntegrationError(IntegrationError::Kind::non_finite, t, msg.str());
    }
  }

  void check_state(double t, std::span<const double> x) const {
    for (double xi : x) {
      if (!std::isfinite(xi)) {
        throw IntegrationError(IntegrationError::Kind::non_finite, t, "non-finite state");
      }
      if (std::abs(xi) > max_abs_) {
        std::ostringstream msg;
        msg << "state left the admissible box |x_i| <= " << max_abs_ << " at t = " << t;
        throw IntegrationError(IntegrationError::Kind::diverged, t, msg.str());
      }
    }
  }

 private:
  const Rhs& rhs_;
  double max_abs_;
};

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct Recorder {
  std::vector<double> times, states, derivs;
  void push(double t, std::span<const double> x, std::span<const double> dx) {
    times.push_back(t);
    states.insert(states.end(), x.begin(), x.end());
    derivs.insert(derivs.end(), dx.begin(), dx.end());
  }
};

double initial_step(const Evaluator& f, double t0, std::span<const double> x0,
                    std::span<const double> f0, double span, const IntegratorConfig& cfg) {
  const std::size_t n = x0.size();
  double d0 = 0, d1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = cfg.atol + cfg.rtol * std::abs(x0[i]);
    d0 += (x0[i] / sc) * (x0[i] / sc);
    d1 += (f0[i] / sc) * (f0[i] / sc);
  }
  d0 = std::sqrt(d0 / n);
  d1 = std::sqrt(d1 / n);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, span);

  std::vector<double> x1(n), f1(n);
  for (std::size_t i = 0; i < n; ++i) x1[i] = x0[i] + h0 * f0[i];
  f(t0 + h0, x1, f1);
  double d2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = cfg.atol + cfg.rtol * std::abs(x0[i]);
    const double r = (f1[i] - f0[i]) / sc;
    d2 += r * r;
  }
  d2 = std::sqrt(d2 / n) / h0;
  const double dm = std::max(d1, d2);
  const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
  return std::min({100 * h0, h1, span});
}

Trajectory integrate_adaptive(const Evaluator& f, std::span<const double> x0, double t0, double t1,
                              const IntegratorConfig& cfg) {
  const std::size_t n = x0.size();
  std::vector<double> x(x0.begin(), x0.end()), xn(n), tmp(n), err(n);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);

  Recorder rec;
  f(t0, x, k1);
  rec.push(t0, x, k1);

  const double span = t1 - t0;
  double h = initial_step(f, t0, x, k1, span, cfg);
  double t = t0;
  double fac_old = 1e-4;
  bool last_rejected = false;
  constexpr double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
  constexpr double fac_min = 0.2, fac_max = 10.0;

  std::size_t steps = 0;
  while (t < t1) {
    if (++steps > cfg.max_steps) {
      std::ostringstream msg;
      msg << "step budget of " << cfg.max_steps << " exhausted at t = " << t;
      throw IntegrationError(IntegrationError::Kind::step_exhaustion, t, msg.str());
    }
    bool final_step = false;
    if (t + h >= t1) {
      h = t1 - t;
      final_step = true;
    }
    if (h <= 16 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
      std::ostringstream msg;
      msg << "step size underflow (h = " << h << ") at t = " << t;
      throw IntegrationError(IntegrationError::Kind::step_underflow, t, msg.str());
    }

    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * a21 * k1[i];
    f(t + c2 * h, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * (a31 * k1[i] + a32 * k2[i]);
    f(t + c3 * h, tmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = x[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    f(t + c4 * h, tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = x[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    f(t + c5 * h, tmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = x[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    const double t_new = final_step ? t1 : t + h;
    f(t_new, tmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      xn[i] = x[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    f(t_new, xn, k7);

    double err_norm = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e =
          h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = cfg.atol + cfg.rtol * std::max(std::abs(x[i]), std::abs(xn[i]));
      err_norm = std::max(err_norm, std::abs(e) / sc);
    }
    if (!std::isfinite(err_norm)) {
      throw IntegrationError(IntegrationError::Kind::non_finite, t, "non-finite error estimate");
    }

    const double fac11 = std::pow(std::max(err_norm, 1e-300), expo1);
    if (err_norm <= 1.0) {
      double fac = fac11 / std::pow(fac_old, beta);
      fac = std::clamp(fac / safe, 1.0 / fac_max, 1.0 / fac_min);
      double h_new = h / fac;
      if (last_rejected) h_new = std::min(h_new, h);
      fac_old = std::max(err_norm, 1e-4);
      last_rejected = false;

      t = t_new;
      x.swap(xn);
      k1.swap(k7);
      f.check_state(t, x);
      rec.push(t, x, k1);
      h = h_new;
    } else {
      h = h / std::min(1.0 / fac_min, fac11 / safe);
      last_rejected = true;
    }
  }
  return Trajectory(std::move(rec.times), std::move(rec.states), n, std::move(rec.derivs));
}

Trajectory integrate_fixed(const Evaluator& f, std::span<const double> x0, double t0, double t1,
                           const IntegratorConfig& cfg) {
  const std::size_t n = x0.size();
  const auto steps = static_cast<std::size_t>(std::ceil((t1 - t0) / cfg.dt * (1 - 1e-12)));
  if (steps > cfg.max_steps) {
    throw IntegrationError(IntegrationError::Kind::step_exhaustion, t0,
                           "fixed-step grid needs more steps than max_steps");
  }
  std::vector<double> x(x0.begin(), x0.end()), tmp(n);
  std::vector<double> k1(n), k2(n), k3(n), k4(n);

  Recorder rec;
  rec.times.reserve(steps + 1);
  rec.states.reserve((steps + 1) * n);
  rec.derivs.reserve((steps + 1) * n);
  f(t0, x, k1);
  rec.push(t0, x, k1);

  double t = t0;
  for (std::size_t s = 1; s <= steps; ++s) {
    const double t_next = s == steps ? t1 : t0 + static_cast<double>(s) * cfg.dt;
    const double h = t_next - t;
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    f(t + 0.5 * h, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    f(t + 0.5 * h, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
    f(t_next, tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    t = t_next;
    f.check_state(t, x);
    f(t, x, k1);
    rec.push(t, x, k1);
  }
  return Trajectory(std::move(rec.times), std::move(rec.states), n, std::move(rec.derivs));
}

// Three-point slopes for trajectories that carry no derivative samples.
std::vector<double> estimate_slopes(const Trajectory& traj) {
  const std::size_t m = traj.size(), d = traj.dimension();
  std::vector<double> out(m * d, 0.0);
  if (m < 2) return out;
  const auto& t = traj.times();
  if (m == 2) {
    for (std::size_t k = 0; k < d; ++k) {
      const double s = (traj.state(1)[k] - traj.state(0)[k]) / (t[1] - t[0]);
      out[k] = out[d + k] = s;
    }
    return out;
  }
  // Derivative at x_j of the quadratic through (i0, i1, i2).
  auto quad = [&](std::size_t i0, std::size_t i1, std::size_t i2, std::size_t j, std::size_t k) {
    const double t0 = t[i0], t1 = t[i1], t2 = t[i2], tj = t[j];
    const double l0 = ((tj - t1) + (tj - t2)) / ((t0 - t1) * (t0 - t2));
    const double l1 = ((tj - t0) + (tj - t2)) / ((t1 - t0) * (t1 - t2));
    const double l2 = ((tj - t0) + (tj - t1)) / ((t2 - t0) * (t2 - t1));
    return l0 * traj.state(i0)[k] + l1 * traj.state(i1)[k] + l2 * traj.state(i2)[k];
  };
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t c = std::clamp<std::size_t>(i, 1, m - 2);
    for (std::size_t k = 0; k < d; ++k) out[i * d + k] = quad(c - 1, c, c + 1, i, k);
  }
  return out;
}

void hermite(const Trajectory& traj, const std::vector<double>& slopes, double t,
             std::span<double> out) {
  const auto& ts = traj.times();
  const std::size_t d = traj.dimension();
  auto it = std::lower_bound(ts.begin(), ts.end(), t);
  if (it != ts.end() && *it == t) {
    const auto s = traj.state(static_cast<std::size_t>(it - ts.begin()));
    std::copy(s.begin(), s.end(), out.begin());
    return;
  }
  const auto i1 = static_cast<std::size_t>(it - ts.begin());
  const std::size_t i0 = i1 - 1;
  const double h = ts[i1] - ts[i0];
  const double s = (t - ts[i0]) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  const auto x0 = traj.state(i0), x1 = traj.state(i1);
  const double* m0 = slopes.empty() ? traj.derivative(i0).data() : slopes.data() + i0 * d;
  const double* m1 = slopes.empty() ? traj.derivative(i1).data() : slopes.data() + i1 * d;
  for (std::size_t k = 0; k < d; ++k) {
    out[k] = h00 * x0[k] + h10 * h * m0[k] + h01 * x1[k] + h11 * h * m1[k];
  }
}

}  // namespace

const char* to_string(IntegrationError::Kind kind) {
  switch (kind) {
    case IntegrationError::Kind::step_exhaustion: return "step_exhaustion";
    case IntegrationError::Kind::step_underflow: return "step_underflow";
    case IntegrationError::Kind::non_finite: return "non_finite";
    case IntegrationError::Kind::diverged: return "diverged";
  }
  return "unknown";
}

void IntegratorConfig::validate() const {
  if (!(dt > 0) || !std::isfinite(dt)) throw std::invalid_argument("integrator dt must be > 0");
  if (!(rtol > 0) || !(atol > 0)) throw std::invalid_argument("integrator tolerances must be > 0");
  if (max_steps == 0) throw std::invalid_argument("integrator max_steps must be > 0");
  if (!(max_abs_state > 0)) throw std::invalid_argument("max_abs_state must be > 0");
}

Trajectory::Trajectory(std::vector<double> times, std::vector<double> states, std::size_t dimension,
                       std::vector<double> derivatives)
    : times_(std::move(times)),
      states_(std::move(states)),
      derivs_(std::move(derivatives)),
      dim_(dimension) {
  if (dim_ == 0) throw std::invalid_argument("trajectory dimension must be positive");
  if (times_.empty()) throw std::invalid_argument("trajectory needs at least one sample");
  if (states_.size() != times_.size() * dim_) {
    throw std::invalid_argument("trajectory state count does not match times");
  }
  if (!derivs_.empty() && derivs_.size() != states_.size()) {
    throw std::invalid_argument("trajectory derivative count does not match states");
  }
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) {
      throw std::invalid_argument("trajectory times must be strictly increasing");
    }
  }
  if (!all_finite(times_) || !all_finite(states_)) {
    throw std::invalid_argument("trajectory contains non-finite values");
  }
}

std::vector<double> Trajectory::component(std::size_t k) const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = states_[i * dim_ + k];
  return out;
}

Trajectory integrate(const Rhs& rhs, std::span<const double> x0, double t0, double t1,
                     const IntegratorConfig& cfg) {
  cfg.validate();
  if (!(t1 > t0)) throw std::invalid_argument("integrate: need t1 > t0");
  if (x0.empty()) throw std::invalid_argument("integrate: empty initial state");
  if (!all_finite(x0)) throw std::invalid_argument("integrate: non-finite initial state");
  const Evaluator f(rhs, cfg);
  f.check_state(t0, x0);
  return cfg.mode == Mode::adaptive ? integrate_adaptive(f, x0, t0, t1, cfg)
                                    : integrate_fixed(f, x0, t0, t1, cfg);
}

Trajectory resample(const Trajectory& traj, std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("resample: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= traj.front_time() && grid[i] <= traj.back_time())) {
      throw std::out_of_range("resample: grid point outside trajectory span");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw std::invalid_argument("resample: grid must be strictly increasing");
    }
  }
  const std::vector<double> slopes =
      traj.has_derivatives() ? std::vector<double>{} : estimate_slopes(traj);
  const std::size_t d = traj.dimension();
  std::vector<double> states(grid.size() * d);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    hermite(traj, slopes, grid[i], std::span<double>(states.data() + i * d, d));
  }
  Trajectory out(std::vector<double>(grid.begin(), grid.end()), std::move(states), d);
  out.metadata() = traj.metadata();
  return out;
}

std::vector<double> interpolate(const Trajectory& traj, double t) {
  const double grid[] = {t};
  const auto r = resample(traj, grid);
  const auto s = r.state(0);
  return {s.begin(), s.end()};
}

std::vector<double> uniform_grid(double t0, double t1, std::size_t n) {
  if (n < 2) throw std::invalid_argument("uniform_grid: need at least two points");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  g.back() = t1;
  return g;
}

}  // namespace averseek::ode
