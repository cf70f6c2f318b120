#include "averseek/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

namespace averseek::source {

namespace {

constexpr int kAntiDerivativeNodes = 4096;

Vec2 periodic_mean(const std::function<Vec2(double)>& f, double period, int n) {
  Vec2 acc{};
  for (int j = 0; j < n; ++j) acc += f(period * j / n);
  return acc / n;
}

struct SampledAntiDerivative {
  double period;
  double h;
  std::vector<Vec2> values;  // U at nodes 0..N-1
  std::vector<Vec2> slopes;  // u at nodes 0..N-1

  Vec2 operator()(double tau) const {
    double s = std::fmod(tau, period);
    if (s < 0) s += period;
    const auto n = static_cast<int>(values.size());
    int j = static_cast<int>(s / h);
    if (j >= n) j = n - 1;
    const int j1 = (j + 1) % n;
    const double x = s / h - j;
    const double h00 = (1 + 2 * x) * (1 - x) * (1 - x);
    const double h10 = x * (1 - x) * (1 - x);
    const double h01 = x * x * (3 - 2 * x);
    const double h11 = x * x * (x - 1);
    return h00 * values[j] + (h10 * h) * slopes[j] + h01 * values[j1] + (h11 * h) * slopes[j1];
  }
};

}  // namespace

BoundaryCheck check_boundary(const DitherBoundary& b, int samples) {
  BoundaryCheck r;
  auto fail = [&](const std::string& s) { r.problems.push_back(s); };
  if (!(b.period > 0)) {
    fail("period must be positive");
    return r;
  }
  if (!(b.area > 0)) fail("area must be positive");
  if (!b.u || !b.u_dot || !b.u_ddot || !b.U || !b.nu) {
    fail("boundary is missing one of u, u_dot, u_ddot, U, nu");
    return r;
  }

  if (norm(b.u(0) - b.u(b.period)) > 1e-10) fail("u is not periodic: u(0) != u(T)");
  r.mean = periodic_mean(b.u, b.period, std::max(samples, 1024));
  if (norm(r.mean) > 1e-9) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "u is not zero-mean; mean = (" << r.mean.x << ", " << r.mean.y
        << "), recenter by subtracting it";
    fail(msg.str());
  }
  if (norm(periodic_mean(b.U, b.period, std::max(samples, 1024))) > 1e-9) {
    fail("U is not zero-mean");
  }

  r.min_speed = std::numeric_limits<double>::infinity();
  const double fd_h = 1e-5 * b.period;
  double worst_normal = 0, worst_dU = 0;
  bool inward = false;
  for (int j = 0; j < samples; ++j) {
    const double tau = b.period * j / samples;
    const Vec2 p = b.u(tau), v = b.u_dot(tau);
    r.min_speed = std::min(r.min_speed, norm(v));
    const Vec2 n = b.nu(p);
    worst_normal = std::max(worst_normal, std::abs(norm(n) - 1.0));
    if (!(dot(n, rotate_cw(v)) > 0)) inward = true;
    const Vec2 dU = (b.U(tau + fd_h) - b.U(tau - fd_h)) / (2 * fd_h);
    worst_dU = std::max(worst_dU, norm(dU - p) / std::max(1.0, norm(p)));
  }
  if (!(r.min_speed > 0)) fail("u_dot vanishes at a sampled node");
  if (worst_normal > 1e-10) fail("nu is not a unit vector field");
  if (inward) fail("nu is not outward for a counter-clockwise parametrization");
  if (worst_dU > 1e-6) fail("U' does not match u");
  return r;
}

void require_valid(const DitherBoundary& b) {
  const auto r = check_boundary(b);
  if (r.ok()) return;
  std::ostringstream msg;
  msg << "invalid dither boundary '" << b.name << "':";
  for (const auto& p : r.problems) msg << "\n  - " << p;
  throw InvalidBoundary(msg.str(), r.mean);
}

DitherBoundary circle_boundary(double a) {
  if (!(a > 0)) throw std::invalid_argument("circle_boundary: radius must be positive");
  DitherBoundary b;
  b.name = "circle";
  b.period = 2 * std::numbers::pi;
  b.u = [a](double t) { return Vec2{a * std::cos(t), a * std::sin(t)}; };
  b.u_dot = [a](double t) { return Vec2{-a * std::sin(t), a * std::cos(t)}; };
  b.u_ddot = [a](double t) { return Vec2{-a * std::cos(t), -a * std::sin(t)}; };
  b.U = [a](double t) { return Vec2{a * std::sin(t), -a * std::cos(t)}; };
  b.nu = [](Vec2 p) { return p / norm(p); };
  b.area = std::numbers::pi * a * a;
  return b;
}

DitherBoundary ellipse_boundary(double ax, double ay) {
  if (!(ax > 0) || !(ay > 0)) throw std::invalid_argument("ellipse_boundary: semi-axes must be positive");
  auto nu = [ax, ay](Vec2 p) {
    const Vec2 g{p.x / (ax * ax), p.y / (ay * ay)};
    return g / norm(g);
  };
  return make_boundary(
      "ellipse", 2 * std::numbers::pi,
      [ax, ay](double t) { return Vec2{ax * std::cos(t), ay * std::sin(t)}; },
      [ax, ay](double t) { return Vec2{-ax * std::sin(t), ay * std::cos(t)}; },
      [ax, ay](double t) { return Vec2{-ax * std::cos(t), -ay * std::sin(t)}; }, nu,
      std::numbers::pi * ax * ay);
}

DitherBoundary make_boundary(std::string name, double period, std::function<Vec2(double)> u,
                             std::function<Vec2(double)> u_dot,
                             std::function<Vec2(double)> u_ddot, std::function<Vec2(Vec2)> nu,
                             double area) {
  if (!(period > 0)) throw std::invalid_argument("make_boundary: period must be positive");
  const Vec2 mean = periodic_mean(u, period, kAntiDerivativeNodes);
  if (norm(mean) > 1e-9) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "boundary '" << name << "' is not zero-mean: mean(u) = (" << mean.x << ", " << mean.y
        << "); apply recentered() to shift it by this amount";
    throw InvalidBoundary(msg.str(), mean);
  }

  auto anti = std::make_shared<SampledAntiDerivative>();
  const int n = kAntiDerivativeNodes;
  anti->period = period;
  anti->h = period / n;
  anti->values.resize(n);
  anti->slopes.resize(n);
  const double h = anti->h;
  Vec2 acc{};
  Vec2 sum{};
  for (int j = 0; j < n; ++j) {
    const double t = j * h;
    anti->values[j] = acc;
    anti->slopes[j] = u(t);
    sum += acc;
    // End-corrected trapezoid step (exact through cubics).
    acc += (h / 2) * (u(t) + u(t + h)) + (h * h / 12) * (u_dot(t) - u_dot(t + h));
  }
  const Vec2 offset = sum / n;
  for (auto& v : anti->values) v -= offset;

  DitherBoundary b;
  b.name = std::move(name);
  b.period = period;
  b.u = std::move(u);
  b.u_dot = std::move(u_dot);
  b.u_ddot = std::move(u_ddot);
  b.U = [anti](double t) { return (*anti)(t); };
  b.nu = std::move(nu);
  b.area = area;
  return b;
}

DitherBoundary recentered(const DitherBoundary& b) {
  const Vec2 mean = periodic_mean(b.u, b.period, kAntiDerivativeNodes);
  auto u = b.u;
  auto nu = b.nu;
  return make_boundary(
      b.name + "-recentered", b.period, [u, mean](double t) { return u(t) - mean; }, b.u_dot,
      b.u_ddot, [nu, mean](Vec2 p) { return nu(p + mean); }, b.area);
}

DitherBoundary scaled(const DitherBoundary& b, double s) {
  if (!(s > 0)) throw std::invalid_argument("scaled: factor must be positive");
  DitherBoundary r;
  r.name = b.name + "-scaled";
  r.period = b.period;
  r.u = [f = b.u, s](double t) { return s * f(t); };
  r.u_dot = [f = b.u_dot, s](double t) { return s * f(t); };
  r.u_ddot = [f = b.u_ddot, s](double t) { return s * f(t); };
  r.U = [f = b.U, s](double t) { return s * f(t); };
  r.nu = [f = b.nu, s](Vec2 p) { return f(p / s); };
  r.area = s * s * b.area;
  return r;
}

}  // namespace averseek::source
