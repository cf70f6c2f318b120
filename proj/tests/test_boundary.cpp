#include <cmath>
#include <numbers>
#include <string>

#include "doctest.h"

#include "averseek/boundary.hpp"
#include "averseek/quadrature.hpp"

using namespace averseek;
using namespace averseek::source;
using std::numbers::pi;

namespace {

// Circle of radius r around `center`, built by hand so that no validation runs.
DitherBoundary shifted_circle(double r, Vec2 center) {
  DitherBoundary b;
  b.name = "shifted";
  b.period = 2 * pi;
  b.u = [=](double t) { return center + Vec2{r * std::cos(t), r * std::sin(t)}; };
  b.u_dot = [=](double t) { return Vec2{-r * std::sin(t), r * std::cos(t)}; };
  b.u_ddot = [=](double t) { return Vec2{-r * std::cos(t), -r * std::sin(t)}; };
  b.U = [=](double t) { return Vec2{r * std::sin(t), -r * std::cos(t)}; };
  b.nu = [=](Vec2 p) { return (p - center) / norm(p - center); };
  b.area = pi * r * r;
  return b;
}

bool mentions(const BoundaryCheck& c, const std::string& word) {
  for (const auto& p : c.problems) {
    if (p.find(word) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("circle boundary closed forms") {
  const auto b = circle_boundary(1.0);
  const auto c = check_boundary(b);
  CHECK(c.ok());
  CHECK(c.min_speed == doctest::Approx(1.0));
  CHECK(norm(quad::periodic_average(b.U, b.period, 64)) < 1e-14);
  CHECK(norm(b.u(0) - Vec2{1, 0}) < 1e-15);
  CHECK(norm(b.u_dot(0) - Vec2{0, 1}) < 1e-15);
  CHECK(b.area == doctest::Approx(pi));

  const auto b3 = circle_boundary(3.0);
  CHECK(b3.speed(0.7) == doctest::Approx(3.0));
  CHECK(norm(b3.nu(b3.u(1.1)) - b3.u(1.1) / 3.0) < 1e-15);
  CHECK_THROWS_AS(circle_boundary(-1), std::invalid_argument);
}

TEST_CASE("ellipse boundary has a consistent numerical anti-derivative") {
  const auto b = ellipse_boundary(2.0, 0.5);
  CHECK(check_boundary(b).ok());
  // Exact U for the ellipse is (2 sin t, -0.5 cos t).
  for (double t : {0.0, 0.3, 1.9, 4.4, 6.1}) {
    CHECK(norm(b.U(t) - Vec2{2 * std::sin(t), -0.5 * std::cos(t)}) < 1e-10);
  }
  CHECK(norm(b.U(0.5) - b.U(0.5 + 2 * pi)) < 1e-12);
}

TEST_CASE("non-zero-mean curves are rejected with the shift") {
  const Vec2 center{2, -1};
  const auto bad = shifted_circle(1, center);
  const auto c = check_boundary(bad);
  CHECK_FALSE(c.ok());
  CHECK(mentions(c, "zero-mean"));
  CHECK(norm(c.mean - center) < 1e-12);

  try {
    make_boundary("shifted", 2 * pi, bad.u, bad.u_dot, bad.u_ddot, bad.nu, bad.area);
    FAIL("expected InvalidBoundary");
  } catch (const InvalidBoundary& e) {
    CHECK(norm(e.recentering_shift() - center) < 1e-12);
  }
  CHECK_THROWS_AS(require_valid(bad), InvalidBoundary);
}

TEST_CASE("recentering yields a valid boundary around the origin") {
  const auto fixed = recentered(shifted_circle(1.5, {2, -1}));
  CHECK(check_boundary(fixed).ok());
  CHECK(norm(fixed.u(0) - Vec2{1.5, 0}) < 1e-12);
  CHECK(norm(fixed.nu(fixed.u(0.8)) - Vec2{std::cos(0.8), std::sin(0.8)}) < 1e-12);
  CHECK_NOTHROW(require_valid(fixed));
}

TEST_CASE("clockwise parametrization fails the outward-normal check") {
  DitherBoundary b = circle_boundary(1.0);
  b.u = [](double t) { return Vec2{std::cos(t), -std::sin(t)}; };
  b.u_dot = [](double t) { return Vec2{-std::sin(t), -std::cos(t)}; };
  b.u_ddot = [](double t) { return Vec2{-std::cos(t), std::sin(t)}; };
  b.U = [](double t) { return Vec2{std::sin(t), std::cos(t)}; };
  const auto c = check_boundary(b);
  CHECK_FALSE(c.ok());
  CHECK(mentions(c, "outward"));
}

TEST_CASE("broken anti-derivative and normal are reported") {
  DitherBoundary b = circle_boundary(1.0);
  b.U = [](double t) { return Vec2{2 * std::sin(t), -std::cos(t)}; };
  b.nu = [](Vec2 p) { return 2.0 * p; };
  const auto c = check_boundary(b);
  CHECK(mentions(c, "U'"));
  CHECK(mentions(c, "unit"));
}

TEST_CASE("scaled boundary") {
  const auto b = scaled(ellipse_boundary(1.0, 0.6), 2.5);
  CHECK(check_boundary(b).ok());
  CHECK(b.area == doctest::Approx(pi * 0.6 * 6.25));
  CHECK(norm(b.u(0.4) - 2.5 * Vec2{std::cos(0.4), 0.6 * std::sin(0.4)}) < 1e-14);
  CHECK(norm(b.U(0.4) - 2.5 * Vec2{std::sin(0.4), -0.6 * std::cos(0.4)}) < 1e-9);
  CHECK_THROWS_AS(scaled(b, 0), std::invalid_argument);
}
