#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"

#include "averseek/quadrature.hpp"
#include "averseek/source.hpp"
#include "oracles.hpp"

using namespace averseek;
using std::numbers::pi;

TEST_CASE("periodic average of constants and trigonometric polynomials") {
  CHECK(quad::periodic_average([](double) { return 2.5; }, 3.7, 9) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(std::abs(quad::periodic_average([](double t) { return std::sin(t) * std::sin(t); }, 2 * pi, 16) - 0.5) < 1e-14);

  const double a = 0.3;
  const double g = quad::periodic_average([&](double t) { return (1.7 + a * std::sin(t)) * a * std::sin(t); }, 2 * pi, 256);
  CHECK(std::abs(g - a * a / 2) < 1e-13);

  // degree < n/2 is integrated exactly
  const int n = 24;
  for (int k = 1; k < n / 2; ++k) {
    const double c = quad::periodic_average([&](double t) { return std::cos(k * t) + std::sin(k * t); }, 2 * pi, n);
    CHECK(std::abs(c) < 1e-13);
  }
}

TEST_CASE("periodic average handles vector values") {
  const Vec2 v = quad::periodic_average([](double t) { return Vec2{std::cos(t) * std::cos(t), 1.0}; }, 2 * pi, 32);
  CHECK(std::abs(v.x - 0.5) < 1e-14);
  CHECK(std::abs(v.y - 1.0) < 1e-14);
  const auto w = quad::periodic_average([](double t) { return std::vector<double>{t, 2.0}; }, 1.0, 4);
  CHECK(w[0] == doctest::Approx(0.375));
  CHECK(w[1] == doctest::Approx(2.0));
}

TEST_CASE("semicircle average basics") {
  CHECK(std::abs(quad::semicircle_average([](double) { return 4.0; }, 0.3, 0.9) - 4.0) < 1e-14);
  CHECK(std::abs(quad::semicircle_average([](double t) { return t; }, 0.3, 0.9) - 0.3) < 1e-14);

  const auto psi = [](double t) { return oracle::poly(oracle::demo_poly(), t); };
  const double v = quad::semicircle_average(psi, 0, 1);
  CHECK(std::abs(v - 10.175) < 1e-12);
  // Brute force on the kernel itself.
  const double brute = oracle::trapezoid(
      [&](double s) { return psi(s) * std::sqrt(std::max(0.0, 1 - s * s)); }, -1, 1, 1'000'000) * 2 / pi;
  // The kernel has square-root endpoints, so the trapezoid converges like n^-1.5.
  CHECK(std::abs(v - brute) < 5e-8);
}

TEST_CASE("Gauss-Chebyshev rule is exact on monomials up to degree 2n-1") {
  for (int n : {1, 3, 8}) {
    const auto rule = quad::gauss_chebyshev2_rule(n);
    CHECK(std::abs(rule.total_weight() - 1) < 1e-14);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      const double got = quad::semicircle_average([k](double t) { return std::pow(t, k); }, 0, 1, rule);
      CHECK(std::abs(got - oracle::semicircle_moment(k, 1)) < 1e-12);
    }
  }
}

TEST_CASE("semicircle average tends to psi with error O(a^2)") {
  const auto psi = [](double t) { return std::exp(std::sin(2 * t)); };
  const double th = 0.4;
  std::vector<double> errs;
  for (double a : {0.1, 0.05, 0.025}) errs.push_back(std::abs(quad::semicircle_average(psi, th, a) - psi(th)));
  CHECK(errs[0] / errs[1] == doctest::Approx(4).epsilon(0.05));
  CHECK(errs[1] / errs[2] == doctest::Approx(4).epsilon(0.05));
}

TEST_CASE("averages are linear in psi") {
  const auto f = [](double t) { return std::cos(3 * t); };
  const auto g = [](double t) { return t * t * t; };
  const auto h = [&](double t) { return 2 * f(t) - 0.5 * g(t); };
  CHECK(std::abs(quad::semicircle_average(h, 0.2, 0.8) -
                 (2 * quad::semicircle_average(f, 0.2, 0.8) - 0.5 * quad::semicircle_average(g, 0.2, 0.8))) < 1e-12);

  const auto disk = quad::disk_rule(1.0);
  const auto F = [](Vec2 p) { return std::sin(p.x) * p.y; };
  const auto G = [](Vec2 p) { return p.x * p.x + 3; };
  const auto H = [&](Vec2 p) { return -F(p) + 4 * G(p); };
  const Vec2 q{0.3, -1};
  CHECK(std::abs(quad::region_average(H, q, disk) -
                 (-quad::region_average(F, q, disk) + 4 * quad::region_average(G, q, disk))) < 1e-12);
}

TEST_CASE("disk rule area and moments") {
  for (double a : {1.0, 0.5, 2.0}) {
    const auto rule = quad::disk_rule(a);
    CHECK(std::abs(rule.total_weight() - pi * a * a) / (pi * a * a) < 1e-12);
    CHECK(std::abs(quad::region_average([](Vec2 p) { return dot(p, p); }, {0, 0}, rule) - a * a / 2) < 1e-12);
    CHECK(std::abs(quad::region_average([](Vec2 p) { return p.x; }, {0, 0}, rule)) < 1e-13);
    CHECK(std::abs(quad::region_average([](Vec2) { return -2.0; }, {5, 5}, rule) + 2) < 1e-14);
    CHECK(std::abs(quad::region_average([](Vec2 p) { return 2 * p.x - p.y; }, {1, 3}, rule) + 1) < 1e-12);
  }
  CHECK_THROWS_AS(quad::disk_rule(0), std::invalid_argument);
  CHECK_THROWS_AS(quad::disk_rule(1, 0, 8), std::invalid_argument);
  CHECK_THROWS_AS(quad::disk_rule(1, 4, 3), std::invalid_argument);
}

TEST_CASE("disk average of the demo signal matches a brute-force midpoint rule") {
  const double tensor = quad::region_average(source::demo_signal, {0, 0}, quad::disk_rule(1.0, 64, 128));
  const double brute = oracle::disk_midpoint_average(source::demo_signal, {0, 0}, 1.0, 2000, 2000);
  CHECK(std::abs(tensor - brute) < 1e-6);
}

TEST_CASE("boundary flux identities") {
  const auto circle = source::circle_boundary(1.0);
  const auto ellipse = source::ellipse_boundary(1.5, 0.7);
  for (const auto* b : {&circle, &ellipse}) {
    const Vec2 zero = quad::boundary_flux([](Vec2) { return 3.0; }, {0.4, -2}, *b, 1.3);
    CHECK(norm(zero) < 1e-12);
    const Vec2 g{0.7, -1.9};
    const Vec2 lin = quad::boundary_flux([&](Vec2 p) { return dot(g, p) + 1; }, {2, 5}, *b, 1.3);
    CHECK(norm(lin - 1.3 * g) < 1e-10);
  }

  const auto disk = quad::disk_rule(1.0);
  const Vec2 q{-9, 7};
  const Vec2 flux = quad::boundary_flux(source::demo_signal, q, circle, 1.0);
  const Vec2 fd = oracle::central_gradient(
      [&](Vec2 x) { return quad::region_average(source::demo_signal, x, disk); }, q, 1e-4);
  CHECK(norm(flux - fd) < 1e-6);
}

TEST_CASE("quadrature errors") {
  CHECK_THROWS_AS(quad::periodic_average([](double) { return 1.0; }, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(quad::periodic_average([](double t) { return t > 0.4 ? NAN : 1.0; }, 1, 8), quad::QuadratureError);
  CHECK_THROWS_AS(quad::semicircle_average([](double) { return INFINITY; }, 0, 1), quad::QuadratureError);
  CHECK_THROWS_AS(quad::semicircle_average([](double) { return 1.0; }, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(quad::region_rule({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(quad::region_rule({{0, 0}}, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(quad::boundary_flux([](Vec2) { return 1.0; }, {0, 0}, source::circle_boundary(1), 1, 4),
                  std::invalid_argument);
}

TEST_CASE("Gauss-Legendre rule integrates polynomials of degree 2n-1") {
  const auto rule = quad::gauss_legendre_rule(5, -1, 2);
  CHECK(std::abs(rule.total_weight() - 3) < 1e-13);
  for (int k = 0; k <= 9; ++k) {
    double s = 0;
    for (std::size_t j = 0; j < rule.size(); ++j) s += rule.weights[j] * std::pow(rule.nodes[j], k);
    const double exact = (std::pow(2.0, k + 1) - std::pow(-1.0, k + 1)) / (k + 1);
    CHECK(s == doctest::Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("user region rule averages") {
  // unit square as four equal cells
  const auto rule = quad::region_rule({{-0.25, -0.25}, {0.25, -0.25}, {-0.25, 0.25}, {0.25, 0.25}}, {0.25, 0.25, 0.25, 0.25});
  CHECK(rule.kind == quad::RuleKind::user_region);
  CHECK(quad::region_average([](Vec2 p) { return p.x + 2; }, {1, 0}, rule) == doctest::Approx(3));
}
