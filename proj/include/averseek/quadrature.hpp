#ifndef AVERSEEK_QUADRATURE_HPP
#define AVERSEEK_QUADRATURE_HPP

#include <cmath>
#include <concepts>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "averseek/boundary.hpp"
#include "averseek/vec2.hpp"

namespace averseek::quad {

enum class RuleKind { periodic_trapezoid, gauss_chebyshev_2, gauss_legendre, disk_polar, user_region };

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class Node>
struct Rule {
  RuleKind kind;
  std::vector<Node> nodes;
  std::vector<double> weights;

  double total_weight() const {
    double s = 0;
    for (double w : weights) s += w;
    return s;
  }
  std::size_t size() const { return nodes.size(); }
};

using LineRule = Rule<double>;
using RegionRule = Rule<Vec2>;

// Nodes j*T/n, weights 1/n (normalized time average).
LineRule periodic_rule(double period, int n);

// Nodes s_j = cos(j*pi/(n+1)), j = 1..n, with weights normalized so that
// sum_j w_j f(s_j) = (2/pi) * int_{-1}^{1} f(s) sqrt(1 - s^2) ds exactly for
// polynomials of degree <= 2n - 1.
LineRule gauss_chebyshev2_rule(int n);

LineRule gauss_legendre_rule(int n, double lo, double hi);

// Polar tensor rule for the disk of radius a: Gauss-Legendre in s = r^2
// times the uniform rule in angle. Weights sum to pi*a^2.
RegionRule disk_rule(double a, int n_r = 64, int n_phi = 128);

// User-supplied interior rule (weights sum to the region's area).
RegionRule region_rule(std::vector<Vec2> nodes, std::vector<double> weights);

// Boundary measure |u'(tau)| dtau sampled on the uniform periodic grid, with
// the outward normal folded in: flux_weights[j] = |u'(tau_j)| nu(u(tau_j)) / n.
struct BoundaryRule {
  std::vector<Vec2> points;
  std::vector<Vec2> flux_weights;
  double period = 0;
  double area = 0;
};

BoundaryRule boundary_rule(const source::DitherBoundary& b, int n = 256);

namespace detail {

inline void require_finite(double v, const char* where) {
  if (!std::isfinite(v)) throw QuadratureError(std::string("non-finite sample in ") + where);
}
inline void require_finite(const Vec2& v, const char* where) {
  require_finite(v.x, where);
  require_finite(v.y, where);
}
inline void require_finite(const std::vector<double>& v, const char* where) {
  for (double x : v) require_finite(x, where);
}

template <class T>
void axpy(T& acc, double w, const T& v) {
  if constexpr (std::is_same_v<T, std::vector<double>>) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * v[i];
  } else {
    acc += w * v;
  }
}

}  // namespace detail

// (1/T) * int_0^T g(tau) dtau by the rectangle rule on n uniform nodes.
// g may return double, Vec2 or std::vector<double>.
template <class F>
auto periodic_average(F&& g, double period, int n) {
  if (n < 2) throw std::invalid_argument("periodic_average: need n >= 2");
  if (!(period > 0)) throw std::invalid_argument("periodic_average: period must be positive");
  using T = std::decay_t<decltype(g(0.0))>;
  T first = g(0.0);
  detail::require_finite(first, "periodic_average");
  T acc = first;
  if constexpr (std::is_same_v<T, std::vector<double>>) {
    for (auto& v : acc) v = 0;
  } else {
    acc = T{};
  }
  const double w = 1.0 / n;
  detail::axpy(acc, w, first);
  for (int j = 1; j < n; ++j) {
    const T v = g(period * j / n);
    detail::require_finite(v, "periodic_average");
    detail::axpy(acc, w, v);
  }
  return acc;
}

// Semicircle-kernel average (2/pi) * int_{-1}^{1} psi(theta + a s) sqrt(1-s^2) ds.
template <class F>
double semicircle_average(F&& psi, double theta, double a, const LineRule& rule) {
  if (!(a > 0)) throw std::invalid_argument("semicircle_average: radius must be positive");
  double acc = 0;
  for (std::size_t j = 0; j < rule.size(); ++j) {
    const double v = psi(theta + a * rule.nodes[j]);
    detail::require_finite(v, "semicircle_average");
    acc += rule.weights[j] * v;
  }
  return acc;
}

template <class F>
double semicircle_average(F&& psi, double theta, double a, int n = 64) {
  if (n < 1) throw std::invalid_argument("semicircle_average: need n >= 1");
  return semicircle_average(psi, theta, a, gauss_chebyshev2_rule(n));
}

// (1/A(M)) * int_M psi(q + p) dp with A(M) = total weight of the rule.
template <class F>
double region_average(F&& psi, Vec2 q, const RegionRule& rule) {
  if (rule.size() == 0) throw QuadratureError("region_average: empty rule");
  double acc = 0, total = 0;
  for (std::size_t j = 0; j < rule.size(); ++j) {
    const double v = psi(q + rule.nodes[j]);
    detail::require_finite(v, "region_average");
    acc += rule.weights[j] * v;
    total += rule.weights[j];
  }
  return acc / total;
}

// (c T / A(M)) * (1/T) int_0^T psi(q + u(tau)) |u'(tau)| nu(u(tau)) dtau.
template <class F>
Vec2 boundary_flux(F&& psi, Vec2 q, const BoundaryRule& rule, double c) {
  Vec2 acc{};
  for (std::size_t j = 0; j < rule.points.size(); ++j) {
    const double v = psi(q + rule.points[j]);
    detail::require_finite(v, "boundary_flux");
    acc += v * rule.flux_weights[j];
  }
  return (c * rule.period / rule.area) * acc;
}

template <class F>
Vec2 boundary_flux(F&& psi, Vec2 q, const source::DitherBoundary& b, double c, int n = 256) {
  if (n < 8) throw std::invalid_argument("boundary_flux: need n >= 8");
  return boundary_flux(psi, q, boundary_rule(b, n), c);
}

}  // namespace averseek::quad

#endif  // AVERSEEK_QUADRATURE_HPP
