#include "averseek/source.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace averseek::source {

namespace {

double checked(double v, double t) {
  if (!std::isfinite(v)) {
    throw ode::IntegrationError(ode::IntegrationError::Kind::non_finite, t,
                                "non-finite signal value");
  }
  return v;
}

}  // namespace

void SourceParams::validate() const {
  if (!(m > 0) || !(kappa > 0) || !(c > 0) || !(omega_H > 0) || !(eps > 0) || !(mu > 0)) {
    throw std::invalid_argument("source parameters must all be strictly positive");
  }
}

SourceState SourceState::unpack(std::span<const double> s) {
  if (s.size() != 5) throw std::invalid_argument("source state has dimension 5");
  return {{s[0], s[1]}, {s[2], s[3]}, s[4]};
}

namespace {

Vec2 force_with_mass(double mass, const SourceParams& p, const DitherBoundary& b, double y,
                     double eta, double t) {
  const double tau = t / p.eps;
  const Vec2 inertial = (mass / (p.eps * p.eps)) * b.u_ddot(tau);
  const Vec2 push = (p.c * b.period / b.area) * (y - eta) * b.speed(tau) * b.nu(b.u(tau));
  return inertial + push;
}

}  // namespace

Vec2 control_force(const SourceParams& p, const DitherBoundary& b, double y, double eta, double t) {
  return force_with_mass(p.m, p, b, y, eta, t);
}

Vec2 control_force_unknown_mass(const SourceParams& p, const DitherBoundary& b, double y,
                                double eta, double t) {
  return force_with_mass(p.mu, p, b, y, eta, t);
}

Vec2 disk_force(const SourceParams& p, double a, double y, double eta, double t) {
  const double s = a * (-p.m / (p.eps * p.eps) + 2 * p.c / (a * a) * (y - eta));
  return {s * std::cos(t / p.eps), s * std::sin(t / p.eps)};
}

RescaledController rescale_for_unknown_mass(const SourceParams& p, const DitherBoundary& b) {
  const double ratio = p.mu / p.m;
  return {scaled(b, ratio), ratio * p.c};
}

void closed_loop_rhs(const SignalFn& psi, const SourceParams& p, const DitherBoundary& b,
                     std::span<const double> s, double t, std::span<double> ds) {
  const Vec2 q{s[0], s[1]}, v{s[2], s[3]};
  const double eta = s[4];
  const double y = checked(psi(q), t);
  const Vec2 acc = (-p.kappa * v + control_force(p, b, y, eta, t)) / p.m;
  ds[0] = v.x;
  ds[1] = v.y;
  ds[2] = acc.x;
  ds[3] = acc.y;
  ds[4] = -p.omega_H * eta + p.omega_H * y;
}

TransformedState to_transformed(const SourceState& s, const SourceParams& p,
                                const DitherBoundary& b, double t) {
  const double tau = t / p.eps;
  const double km = p.kappa / p.m;
  const Vec2 u = b.u(tau);
  return {s.q - u + (p.eps * km) * b.U(tau), s.q_dot - b.u_dot(tau) / p.eps + km * u, s.eta};
}

SourceState from_transformed(const TransformedState& s, const SourceParams& p,
                             const DitherBoundary& b, double t) {
  const double tau = t / p.eps;
  const double km = p.kappa / p.m;
  const Vec2 u = b.u(tau);
  return {s.q + u - (p.eps * km) * b.U(tau), s.q_dot + b.u_dot(tau) / p.eps - km * u, s.eta};
}

void transformed_rhs(const SignalFn& psi, const SourceParams& p, const DitherBoundary& b,
                     std::span<const double> s, double t, std::span<double> ds) {
  const double tau = t / p.eps;
  const double km = p.kappa / p.m;
  const Vec2 qt{s[0], s[1]}, vt{s[2], s[3]};
  const double eta = s[4];
  const Vec2 u = b.u(tau);
  const double y = checked(psi(qt + u - (p.eps * km) * b.U(tau)), t);
  const Vec2 flux_dir = (p.c * b.period / b.area) * b.speed(tau) * b.nu(u);
  const Vec2 acc = (-p.kappa * vt + y * flux_dir - eta * flux_dir + (p.kappa * km) * u) / p.m;
  ds[0] = vt.x;
  ds[1] = vt.y;
  ds[2] = acc.x;
  ds[3] = acc.y;
  ds[4] = -p.omega_H * eta + p.omega_H * y;
}

ode::Rhs make_closed_loop(SignalFn psi, SourceParams p, DitherBoundary b) {
  p.validate();
  require_valid(b);
  return [psi = std::move(psi), p, b = std::move(b)](double t, std::span<const double> x,
                                                     std::span<double> dx) {
    closed_loop_rhs(psi, p, b, x, t, dx);
  };
}

ode::Rhs make_transformed(SignalFn psi, SourceParams p, DitherBoundary b) {
  p.validate();
  require_valid(b);
  return [psi = std::move(psi), p, b = std::move(b)](double t, std::span<const double> x,
                                                     std::span<double> dx) {
    transformed_rhs(psi, p, b, x, t, dx);
  };
}

AveragedObjective2D::AveragedObjective2D(SignalFn psi, DitherBoundary boundary,
                                         quad::RegionRule interior, double c, int boundary_nodes)
    : psi_(std::move(psi)),
      boundary_(std::move(boundary)),
      interior_(std::move(interior)),
      flux_rule_(quad::boundary_rule(boundary_, boundary_nodes)),
      periodic_(quad::periodic_rule(boundary_.period, boundary_nodes)),
      c_(c) {
  if (!(c > 0)) throw std::invalid_argument("flux gain c must be positive");
}

double AveragedObjective2D::psi_bar(Vec2 q) const {
  return quad::region_average(psi_, q, interior_);
}

Vec2 AveragedObjective2D::G(Vec2 q) const { return quad::boundary_flux(psi_, q, flux_rule_, c_); }

Vec2 AveragedObjective2D::grad_psi_bar_fd(Vec2 q, double h) const {
  return {(psi_bar(q + Vec2{h, 0}) - psi_bar(q - Vec2{h, 0})) / (2 * h),
          (psi_bar(q + Vec2{0, h}) - psi_bar(q - Vec2{0, h})) / (2 * h)};
}

double AveragedObjective2D::z(Vec2 q) const {
  double acc = 0;
  for (std::size_t j = 0; j < flux_rule_.points.size(); ++j) {
    const double v = psi_(q + flux_rule_.points[j]);
    if (!std::isfinite(v)) throw quad::QuadratureError("non-finite sample in z");
    acc += periodic_.weights[j] * v;
  }
  return acc;
}

AveragedObjective2D disk_objective(SignalFn psi, double a, double c) {
  return AveragedObjective2D(std::move(psi), circle_boundary(a), quad::disk_rule(a, 64, 128), c);
}

void averaged_rhs(const AveragedObjective2D& obj, const SourceParams& p,
                  std::span<const double> s, std::span<double> ds) {
  const Vec2 q{s[0], s[1]}, v{s[2], s[3]};
  const double eta = s[4];
  const Vec2 acc = (-p.kappa * v + obj.G(q)) / p.m;
  ds[0] = v.x;
  ds[1] = v.y;
  ds[2] = acc.x;
  ds[3] = acc.y;
  ds[4] = -p.omega_H * eta + p.omega_H * obj.z(q);
}

ode::Rhs make_averaged(AveragedObjective2D obj, SourceParams p) {
  p.validate();
  return [obj = std::move(obj), p](double, std::span<const double> x, std::span<double> dx) {
    averaged_rhs(obj, p, x, dx);
  };
}

double divergence_identity_residual(const AveragedObjective2D& obj, std::span<const Vec2> grid,
                                    double h) {
  double worst = 0;
  for (const Vec2& q : grid) {
    worst = std::max(worst, norm(obj.G(q) - obj.c() * obj.grad_psi_bar_fd(q, h)));
  }
  return worst;
}

double demo_signal(Vec2 q) {
  return (6 + std::cos(3 * q.x) + std::cos(3 * q.y)) * std::exp(-dot(q, q) / 25.0);
}

Assumption4Report check_assumption4(const AveragedObjective2D& obj, Vec2 q_star, double lo,
                                    double hi, double step, double C_radius, double grad_tol) {
  if (!(step > 0) || !(hi > lo)) throw std::invalid_argument("check_assumption4: bad grid");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  auto node = [&](std::size_t i, std::size_t j) {
    return Vec2{lo + static_cast<double>(i) * step, lo + static_cast<double>(j) * step};
  };

  Assumption4Report r;
  const double star_value = obj.psi_bar(q_star);
  std::vector<Vec2> grad(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const Vec2 q = node(i, j);
      const Vec2 g = obj.grad_psi_bar(q);
      grad[i * n + j] = g;
      if (norm(q - q_star) < 1e-12) continue;
      if (!(obj.psi_bar(q) < star_value)) r.value_violations.push_back(q);
      if (!(norm(g) > grad_tol)) r.gradient_violations.push_back(q);
      if (norm(q - q_star) > C_radius && dot(g, q - q_star) > 0) r.direction_violations.push_back(q);
    }
  }

  // Cells where both gradient components change sign may hide a critical point.
  auto changes_sign = [](double a, double b, double c, double d) {
    const double lo_v = std::min({a, b, c, d}), hi_v = std::max({a, b, c, d});
    return lo_v <= 0 && hi_v >= 0;
  };
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = 0; j + 1 < n; ++j) {
      const Vec2 g00 = grad[i * n + j], g10 = grad[(i + 1) * n + j];
      const Vec2 g01 = grad[i * n + j + 1], g11 = grad[(i + 1) * n + j + 1];
      if (!changes_sign(g00.x, g10.x, g01.x, g11.x) || !changes_sign(g00.y, g10.y, g01.y, g11.y)) {
        continue;
      }
      // Newton on grad psi_bar = 0 with a finite-difference Jacobian.
      const Vec2 c0 = node(i, j);
      Vec2 q = c0 + Vec2{step / 2, step / 2};
      bool converged = false;
      for (int it = 0; it < 30; ++it) {
        const double h = 1e-5;
        const Vec2 g = obj.grad_psi_bar(q);
        const Vec2 gx = (obj.grad_psi_bar(q + Vec2{h, 0}) - obj.grad_psi_bar(q - Vec2{h, 0})) / (2 * h);
        const Vec2 gy = (obj.grad_psi_bar(q + Vec2{0, h}) - obj.grad_psi_bar(q - Vec2{0, h})) / (2 * h);
        const double det = gx.x * gy.y - gy.x * gx.y;
        if (det == 0) break;
        const Vec2 dq{(g.x * gy.y - gy.x * g.y) / det, (gx.x * g.y - g.x * gx.y) / det};
        q -= dq;
        if (norm(dq) < 1e-12) {
          converged = true;
          break;
        }
      }
      const bool inside = q.x >= c0.x - 1e-9 && q.x <= c0.x + step + 1e-9 && q.y >= c0.y - 1e-9 &&
                          q.y <= c0.y + step + 1e-9;
      if (converged && inside && norm(q - q_star) > 1e-6 && norm(obj.grad_psi_bar(q)) <= 1e-9) {
        r.critical_points.push_back(q);
      }
    }
  }
  return r;
}

OrbitSummary final_period_orbit(const ode::Trajectory& traj, double period) {
  const double t1 = traj.back_time();
  const double t0 = std::max(traj.front_time(), t1 - period);
  constexpr std::size_t n = 512;
  OrbitSummary s;
  Vec2 acc{};
  // Rectangle rule over one full period (periodic integrand).
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = t0 + (t1 - t0) * static_cast<double>(i) / n;
  const auto r = ode::resample(traj, grid);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 q{r.state(i)[0], r.state(i)[1]};
    acc += q;
    s.max_radius = std::max(s.max_radius, norm(q));
  }
  const auto last = traj.back_state();
  s.max_radius = std::max(s.max_radius, norm(Vec2{last[0], last[1]}));
  s.mean = acc / static_cast<double>(n);
  return s;
}

ode::Trajectory map_to_physical(const ode::Trajectory& tr, const SourceParams& p,
                                const DitherBoundary& b) {
  if (tr.dimension() != 5) throw std::invalid_argument("map_to_physical: expected 5-d states");
  std::vector<double> states;
  std::vector<double> derivs;
  states.reserve(tr.size() * 5);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const auto s = from_transformed(SourceState::unpack(tr.state(i)), p, b, tr.time(i)).pack();
    states.insert(states.end(), s.begin(), s.end());
  }
  ode::Trajectory out(tr.times(), std::move(states), 5);
  out.metadata() = tr.metadata();
  return out;
}

}  // namespace averseek::source
