#include "averseek/quadrature.hpp"

#include <numbers>

namespace averseek::quad {

LineRule periodic_rule(double period, int n) {
  if (n < 2) throw std::invalid_argument("periodic_rule: need n >= 2");
  if (!(period > 0)) throw std::invalid_argument("periodic_rule: period must be positive");
  LineRule r{RuleKind::periodic_trapezoid, {}, {}};
  r.nodes.reserve(n);
  for (int j = 0; j < n; ++j) r.nodes.push_back(period * j / n);
  r.weights.assign(n, 1.0 / n);
  return r;
}

LineRule gauss_chebyshev2_rule(int n) {
  if (n < 1) throw std::invalid_argument("gauss_chebyshev2_rule: need n >= 1");
  LineRule r{RuleKind::gauss_chebyshev_2, {}, {}};
  r.nodes.reserve(n);
  r.weights.reserve(n);
  for (int j = 1; j <= n; ++j) {
    const double angle = j * std::numbers::pi / (n + 1);
    const double s = std::sin(angle);
    r.nodes.push_back(std::cos(angle));
    r.weights.push_back(2.0 / (n + 1) * s * s);
  }
  return r;
}

LineRule gauss_legendre_rule(int n, double lo, double hi) {
  if (n < 1) throw std::invalid_argument("gauss_legendre_rule: need n >= 1");
  LineRule r{RuleKind::gauss_legendre, std::vector<double>(n), std::vector<double>(n)};
  const double mid = 0.5 * (hi + lo), half = 0.5 * (hi - lo);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton iteration on P_n from the Tricomi initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 1 ? x : p1;
      const double pn1 = n == 1 ? 1 : p0;
      dp = n * (x * pn - pn1) / (x * x - 1);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n == 1 ? 1 : n * (x * p1 - p0) / (x * x - 1);
    const double w = 2.0 / ((1 - x * x) * dp * dp);
    r.nodes[i] = mid - half * x;
    r.nodes[n - 1 - i] = mid + half * x;
    r.weights[i] = r.weights[n - 1 - i] = half * w;
  }
  return r;
}

RegionRule disk_rule(double a, int n_r, int n_phi) {
  if (!(a > 0)) throw std::invalid_argument("disk_rule: radius must be positive");
  if (n_r < 1 || n_phi < 4) throw std::invalid_argument("disk_rule: need n_r >= 1, n_phi >= 4");
  const LineRule radial = gauss_legendre_rule(n_r, 0.0, a * a);
  RegionRule r{RuleKind::disk_polar, {}, {}};
  r.nodes.reserve(static_cast<std::size_t>(n_r) * n_phi);
  r.weights.reserve(static_cast<std::size_t>(n_r) * n_phi);
  const double dphi = 2 * std::numbers::pi / n_phi;
  for (int i = 0; i < n_r; ++i) {
    const double rad = std::sqrt(radial.nodes[i]);
    // r dr dphi = (1/2) ds dphi
    const double w = 0.5 * radial.weights[i] * dphi;
    for (int j = 0; j < n_phi; ++j) {
      const double phi = j * dphi;
      r.nodes.push_back({rad * std::cos(phi), rad * std::sin(phi)});
      r.weights.push_back(w);
    }
  }
  return r;
}

RegionRule region_rule(std::vector<Vec2> nodes, std::vector<double> weights) {
  if (nodes.empty()) throw std::invalid_argument("region_rule: empty rule");
  if (nodes.size() != weights.size()) {
    throw std::invalid_argument("region_rule: nodes and weights differ in length");
  }
  for (double w : weights) {
    if (!(w > 0)) throw std::invalid_argument("region_rule: weights must be positive");
  }
  return RegionRule{RuleKind::user_region, std::move(nodes), std::move(weights)};
}

BoundaryRule boundary_rule(const source::DitherBoundary& b, int n) {
  if (n < 8) throw std::invalid_argument("boundary_rule: need n >= 8");
  BoundaryRule r;
  r.period = b.period;
  r.area = b.area;
  r.points.reserve(n);
  r.flux_weights.reserve(n);
  for (int j = 0; j < n; ++j) {
    const double tau = b.period * j / n;
    const Vec2 p = b.u(tau);
    const double speed = b.speed(tau);
    if (!(speed > 0)) throw QuadratureError("boundary_rule: degenerate |u'| = 0 at a node");
    r.points.push_back(p);
    r.flux_weights.push_back((speed / n) * b.nu(p));
  }
  return r;
}

}  // namespace averseek::quad
