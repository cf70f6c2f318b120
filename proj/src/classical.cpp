#include "averseek/classical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace averseek::classical {

namespace {

void require_finite(std::span<const double> v, double t, const char* where) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw ode::IntegrationError(ode::IntegrationError::Kind::non_finite, t,
                                  std::string("non-finite derivative in ") + where);
    }
  }
}

}  // namespace

void ClassicalGains::validate() const {
  if (!(eps > 0) || !(a > 0) || !(omega_H > 0) || !(omega_L > 0) || !(K > 0)) {
    throw std::invalid_argument("classical gains must all be strictly positive");
  }
}

std::vector<double> ClassicalState::pack(bool amplitude_state) const {
  std::vector<double> s(x);
  s.push_back(theta_hat);
  s.push_back(xi);
  s.push_back(eta);
  if (amplitude_state) s.push_back(a);
  return s;
}

ClassicalState ClassicalState::unpack(std::span<const double> s, int n, bool amplitude_state,
                                      double frozen_a) {
  const auto nn = static_cast<std::size_t>(n);
  if (s.size() != nn + 3 + (amplitude_state ? 1 : 0)) {
    throw std::invalid_argument("classical state has the wrong dimension");
  }
  ClassicalState st;
  st.x.assign(s.begin(), s.begin() + n);
  st.theta_hat = s[nn];
  st.xi = s[nn + 1];
  st.eta = s[nn + 2];
  st.a = amplitude_state ? s[nn + 3] : frozen_a;
  return st;
}

void closed_loop_rhs(const ClassicalPlant& plant, const ClassicalGains& g,
                     std::span<const double> s, double t, bool decay, std::span<double> ds) {
  const auto n = static_cast<std::size_t>(plant.n);
  const auto x = s.first(n);
  const double theta = s[n], xi = s[n + 1], eta = s[n + 2];
  const double a = decay ? s[n + 3] : g.a;
  const double dither = a * std::sin(g.eps * t);

  plant.f(x, plant.alpha(x, theta + dither), ds.first(n));
  const double y = plant.h(x);
  ds[n] = g.k() * xi;
  ds[n + 1] = -g.omega_l() * xi + g.omega_l() * (y - eta) * dither;
  ds[n + 2] = -g.omega_h() * eta + g.omega_h() * y;
  if (decay) ds[n + 3] = -g.eps * g.eps * a;
  require_finite(ds, t, "classical closed loop");
}

void time_scaled_rhs(const ClassicalPlant& plant, const ClassicalGains& g,
                     std::span<const double> s, double tau, std::span<double> ds) {
  const auto n = static_cast<std::size_t>(plant.n);
  const auto x = s.first(n);
  const double theta = s[n], xi = s[n + 1], eta = s[n + 2];
  const double dither = g.a * std::sin(tau);

  plant.f(x, plant.alpha(x, theta + dither), ds.first(n));
  for (std::size_t i = 0; i < n; ++i) ds[i] /= g.eps;
  const double y = plant.h(x);
  ds[n] = g.K * xi;
  ds[n + 1] = -g.omega_L * xi + g.omega_L * (y - eta) * dither;
  ds[n + 2] = -g.omega_H * eta + g.omega_H * y;
  require_finite(ds, tau, "classical time-scaled system");
}

void reduced_rhs(const ScalarFn& psi, const ClassicalGains& g, std::span<const double> s,
                 double tau, std::span<double> ds) {
  const double theta = s[0], dtheta = s[1], eta = s[2];
  const double d = g.a * std::sin(tau);
  const double y = psi(theta + d);
  ds[0] = dtheta;
  ds[1] = -g.omega_L * dtheta + g.K * g.omega_L * (y - eta) * d;
  ds[2] = -g.omega_H * eta + g.omega_H * y;
  require_finite(ds, tau, "reduced system");
}

ode::Rhs make_closed_loop(ClassicalPlant plant, ClassicalGains gains, bool decay) {
  gains.validate();
  return [plant = std::move(plant), gains, decay](double t, std::span<const double> x,
                                                  std::span<double> dx) {
    closed_loop_rhs(plant, gains, x, t, decay, dx);
  };
}

ode::Rhs make_time_scaled(ClassicalPlant plant, ClassicalGains gains) {
  gains.validate();
  return [plant = std::move(plant), gains](double tau, std::span<const double> x,
                                           std::span<double> dx) {
    time_scaled_rhs(plant, gains, x, tau, dx);
  };
}

ode::Rhs make_reduced(ScalarFn psi, ClassicalGains gains) {
  gains.validate();
  return [psi = std::move(psi), gains](double tau, std::span<const double> x,
                                       std::span<double> dx) { reduced_rhs(psi, gains, x, tau, dx); };
}

AveragedObjective1D::AveragedObjective1D(ScalarFn psi, double a, std::optional<ScalarFn> dpsi,
                                         int semicircle_nodes, int periodic_nodes)
    : psi_(std::move(psi)),
      dpsi_(std::move(dpsi)),
      a_(a),
      semicircle_(quad::gauss_chebyshev2_rule(semicircle_nodes)),
      periodic_(quad::periodic_rule(2 * std::numbers::pi, periodic_nodes)) {
  if (!(a > 0)) throw std::invalid_argument("averaging radius must be positive");
}

double AveragedObjective1D::psi_bar(double theta) const {
  return quad::semicircle_average(psi_, theta, a_, semicircle_);
}

double AveragedObjective1D::dpsi_bar(double theta) const {
  if (dpsi_) return quad::semicircle_average(*dpsi_, theta, a_, semicircle_);
  constexpr double h = 1e-5;
  return (psi_bar(theta + h) - psi_bar(theta - h)) / (2 * h);
}

double AveragedObjective1D::G(double theta) const {
  double acc = 0;
  for (std::size_t j = 0; j < periodic_.size(); ++j) {
    const double d = a_ * std::sin(periodic_.nodes[j]);
    const double v = psi_(theta + d) * d;
    if (!std::isfinite(v)) throw quad::QuadratureError("non-finite sample in G");
    acc += periodic_.weights[j] * v;
  }
  return acc;
}

double AveragedObjective1D::z(double theta) const {
  double acc = 0;
  for (std::size_t j = 0; j < periodic_.size(); ++j) {
    const double v = psi_(theta + a_ * std::sin(periodic_.nodes[j]));
    if (!std::isfinite(v)) throw quad::QuadratureError("non-finite sample in z");
    acc += periodic_.weights[j] * v;
  }
  return acc;
}

void averaged_rhs(const AveragedObjective1D& obj, const ClassicalGains& g,
                  std::span<const double> s, std::span<double> ds) {
  const double theta = s[0], dtheta = s[1], eta = s[2];
  ds[0] = dtheta;
  ds[1] = -g.omega_L * dtheta + g.K * g.omega_L * obj.G(theta);
  ds[2] = -g.omega_H * eta + g.omega_H * obj.z(theta);
}

ode::Rhs make_averaged(AveragedObjective1D obj, ClassicalGains gains) {
  return [obj = std::move(obj), gains](double, std::span<const double> x, std::span<double> dx) {
    averaged_rhs(obj, gains, x, dx);
  };
}

GradientIdentityFit gradient_identity_residual(const AveragedObjective1D& obj,
                                               std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("gradient_identity_residual: empty grid");
  const double a2 = obj.a() * obj.a();
  std::vector<double> G(grid.size()), D(grid.size());
  double num = 0, den = 0, scale = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    G[i] = obj.G(grid[i]);
    D[i] = a2 * obj.dpsi_bar(grid[i]);
    num += G[i] * D[i];
    den += D[i] * D[i];
    scale = std::max({scale, std::abs(G[i]), std::abs(D[i])});
  }
  GradientIdentityFit fit;
  // Both sides vanish identically (e.g. constant psi).
  if (den <= 1e-26 * std::max(1.0, scale * scale) * static_cast<double>(grid.size())) {
    for (double g : G) fit.max_residual = std::max(fit.max_residual, std::abs(g));
    return fit;
  }
  fit.fitted = true;
  fit.C_fit = num / den;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    fit.max_residual = std::max(fit.max_residual, std::abs(G[i] - fit.C_fit * D[i]));
  }
  return fit;
}

double gradient_identity_max_residual(const AveragedObjective1D& obj,
                                      std::span<const double> grid) {
  const double half_a2 = 0.5 * obj.a() * obj.a();
  double worst = 0;
  for (double th : grid) worst = std::max(worst, std::abs(obj.G(th) - half_a2 * obj.dpsi_bar(th)));
  return worst;
}

double demo_psi(double t) {
  const double t2 = t * t;
  return -t2 * t2 + 8.0 / 15.0 * t2 * t + 6.0 / 5.0 * t2 + 10.0;
}

double demo_dpsi(double t) { return -4 * t * t * t + 8.0 / 5.0 * t * t + 12.0 / 5.0 * t; }

ClassicalPlant demo_plant() {
  ClassicalPlant p;
  p.n = 2;
  p.f = [](std::span<const double> x, double u, std::span<double> dx) {
    dx[0] = -x[0] + x[1];
    dx[1] = x[1] + u;
  };
  p.h = [](std::span<const double> x) { return demo_psi(x[0] + 3 * x[1]); };
  p.alpha = [](std::span<const double> x, double theta) { return -x[0] - 4 * x[1] + theta; };
  p.l = [](double theta) { return std::vector<double>{theta / 4, theta / 4}; };
  return p;
}

double demo_psi_bar_closed_form(double a, double t) {
  const double a2 = a * a, t2 = t * t;
  return -t2 * t2 + 8.0 / 15.0 * t2 * t + (6.0 / 5.0 - 1.5 * a2) * t2 + 0.4 * a2 * t + 10.0 +
         0.3 * a2 - a2 * a2 / 8.0;
}

double demo_psi_bar_argmax(double a) {
  // Critical points solve -4t^3 + (8/5)t^2 + 2(6/5 - 3a^2/2)t + (2/5)a^2 = 0.
  auto d = [a](double t) {
    const double a2 = a * a;
    return -4 * t * t * t + 1.6 * t * t + 2 * (1.2 - 1.5 * a2) * t + 0.4 * a2;
  };
  double best = 0, best_val = -std::numeric_limits<double>::infinity();
  constexpr double lo = -4, hi = 4, step = 1e-3;
  for (double t = lo; t < hi; t += step) {
    double l = t, r = t + step;
    if (d(l) > 0 && d(r) <= 0) {
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (l + r);
        (d(m) > 0 ? l : r) = m;
      }
      const double root = 0.5 * (l + r);
      const double v = demo_psi_bar_closed_form(a, root);
      if (v > best_val) {
        best_val = v;
        best = root;
      }
    }
  }
  return best;
}

double steady_state_output(const ClassicalPlant& plant, double theta) {
  const auto x = plant.l(theta);
  return plant.h(x);
}

Assumption3Report check_assumption3(const AveragedObjective1D& obj, double theta_star,
                                    std::span<const double> grid) {
  Assumption3Report r;
  for (double th : grid) {
    if (th == theta_star) continue;
    if (!(obj.dpsi_bar(th) * (th - theta_star) < 0)) {
      r.holds = false;
      r.violations.push_back(th);
    }
  }
  return r;
}

ClassicalState demo_initial_state(const ClassicalPlant& plant, double theta_hat0,
                                  std::vector<double> x0, double a0) {
  ClassicalState s;
  s.x = std::move(x0);
  s.theta_hat = theta_hat0;
  s.xi = 0;
  s.eta = plant.h(s.x);
  s.a = a0;
  return s;
}

}  // namespace averseek::classical
