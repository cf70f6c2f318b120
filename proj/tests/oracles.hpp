// Test-side reference computations, written independently of the library's
// quadrature rules.
#ifndef AVERSEEK_TESTS_ORACLES_HPP
#define AVERSEEK_TESTS_ORACLES_HPP

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "averseek/vec2.hpp"

namespace oracle {

// Composite trapezoid on [lo, hi] with n panels.
inline double trapezoid(const std::function<double(double)>& f, double lo, double hi, long n) {
  const double h = (hi - lo) / static_cast<double>(n);
  double s = 0.5 * (f(lo) + f(hi));
  for (long i = 1; i < n; ++i) s += f(lo + h * static_cast<double>(i));
  return s * h;
}

inline double binomial(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// E[t^k] for t distributed with density (2/(pi a^2)) sqrt(a^2 - t^2) on [-a, a]:
// zero for odd k, (a/2)^k * Catalan(k/2) for even k.
inline double semicircle_moment(int k, double a) {
  if (k % 2) return 0;
  const int m = k / 2;
  return std::pow(a / 2, k) * binomial(2 * m, m) / (m + 1);
}

// (1/2pi) int_0^{2pi} sin^k(tau) dtau
inline double sine_power_mean(int k) {
  if (k % 2) return 0;
  return binomial(k, k / 2) / std::pow(2.0, k);
}

// Polynomial sum_k c[k] t^k and its shift-expanded averages.
inline double poly(const std::vector<double>& c, double t) {
  double s = 0;
  for (std::size_t k = c.size(); k-- > 0;) s = s * t + c[k];
  return s;
}

inline double poly_derivative(const std::vector<double>& c, double t) {
  double s = 0;
  for (std::size_t k = c.size(); k-- > 1;) s = s * t + static_cast<double>(k) * c[k];
  return s;
}

// Semicircle-kernel average of a polynomial by binomial expansion.
inline double poly_semicircle_average(const std::vector<double>& c, double theta, double a) {
  double s = 0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    for (std::size_t j = 0; j <= k; ++j) {
      s += c[k] * binomial(static_cast<int>(k), static_cast<int>(j)) *
           std::pow(theta, static_cast<double>(k - j)) * semicircle_moment(static_cast<int>(j), a);
    }
  }
  return s;
}

// (1/2pi) int psi(theta + a sin tau) a sin tau dtau for polynomial psi.
inline double poly_dither_correlation(const std::vector<double>& c, double theta, double a) {
  double s = 0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    for (std::size_t j = 0; j <= k; ++j) {
      s += c[k] * binomial(static_cast<int>(k), static_cast<int>(j)) *
           std::pow(theta, static_cast<double>(k - j)) * std::pow(a, static_cast<double>(j + 1)) *
           sine_power_mean(static_cast<int>(j + 1));
    }
  }
  return s;
}

// -t^4 + (8/15)t^3 + (6/5)t^2 + 10
inline const std::vector<double>& demo_poly() {
  static const std::vector<double> c{10.0, 0.0, 6.0 / 5.0, 8.0 / 15.0, -1.0};
  return c;
}

// Disk average by the midpoint rule in polar coordinates (n_r x n_phi cells).
inline double disk_midpoint_average(const std::function<double(averseek::Vec2)>& psi,
                                    averseek::Vec2 q, double a, int n_r, int n_phi) {
  const double dr = a / n_r, dphi = 2 * std::numbers::pi / n_phi;
  double s = 0;
  for (int i = 0; i < n_r; ++i) {
    const double r = (i + 0.5) * dr;
    double ring = 0;
    for (int j = 0; j < n_phi; ++j) {
      const double phi = (j + 0.5) * dphi;
      ring += psi({q.x + r * std::cos(phi), q.y + r * std::sin(phi)});
    }
    s += ring * r;
  }
  return s * dr * dphi / (std::numbers::pi * a * a);
}

inline averseek::Vec2 central_gradient(const std::function<double(averseek::Vec2)>& f,
                                       averseek::Vec2 q, double h) {
  return {(f({q.x + h, q.y}) - f({q.x - h, q.y})) / (2 * h),
          (f({q.x, q.y + h}) - f({q.x, q.y - h})) / (2 * h)};
}

// Five-point central first derivative of uniformly spaced samples.
inline double five_point(const std::vector<double>& f, std::size_t i, double h) {
  return (-f[i + 2] + 8 * f[i + 1] - 8 * f[i - 1] + f[i - 2]) / (12 * h);
}

// Solution of x'' + k x' + x = 0 (k < 2) with x(0) = x0, x'(0) = v0.
inline double underdamped(double k, double x0, double v0, double t) {
  const double s = k / 2, w = std::sqrt(1 - s * s);
  return std::exp(-s * t) * (x0 * std::cos(w * t) + (v0 + s * x0) / w * std::sin(w * t));
}

}  // namespace oracle

#endif  // AVERSEEK_TESTS_ORACLES_HPP
