#ifndef AVERSEEK_BOUNDARY_HPP
#define AVERSEEK_BOUNDARY_HPP

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "averseek/vec2.hpp"

namespace averseek::source {

// Periodic parametrization u of the boundary of a planar region M, traversed
// counter-clockwise, with the data the boundary-dither controller needs.
struct DitherBoundary {
  std::string name;
  double period = 0;
  std::function<Vec2(double)> u;
  std::function<Vec2(double)> u_dot;
  std::function<Vec2(double)> u_ddot;
  std::function<Vec2(double)> U;   // zero-mean anti-derivative of u
  std::function<Vec2(Vec2)> nu;    // outward unit normal at a boundary point
  double area = 0;

  double speed(double tau) const { return norm(u_dot(tau)); }
};

class InvalidBoundary : public std::invalid_argument {
 public:
  InvalidBoundary(const std::string& what, Vec2 shift = {})
      : std::invalid_argument(what), shift_(shift) {}
  // Time-average of u; subtracting it (see recentered) gives a zero-mean curve.
  Vec2 recentering_shift() const { return shift_; }

 private:
  Vec2 shift_;
};

struct BoundaryCheck {
  std::vector<std::string> problems;
  Vec2 mean{};
  double min_speed = 0;
  bool ok() const { return problems.empty(); }
};

// Samples the curve on `samples` uniform nodes and reports every violated
// property (periodicity, zero mean, regular speed, unit outward normal,
// anti-derivative consistency).
BoundaryCheck check_boundary(const DitherBoundary& b, int samples = 512);

// Throws InvalidBoundary listing the problems found by check_boundary.
void require_valid(const DitherBoundary& b);

DitherBoundary circle_boundary(double radius);
DitherBoundary ellipse_boundary(double semi_x, double semi_y);

// Builds a boundary from a user curve. U is computed by cumulative
// end-corrected trapezoid integration of u on 4096 nodes, mean removal and
// cubic Hermite interpolation. Throws InvalidBoundary if u is not zero-mean.
DitherBoundary make_boundary(std::string name, double period, std::function<Vec2(double)> u,
                             std::function<Vec2(double)> u_dot,
                             std::function<Vec2(double)> u_ddot, std::function<Vec2(Vec2)> nu,
                             double area);

// Explicit recentering: u - mean(u), with the normal field shifted to match.
// This changes which region is averaged around q.
DitherBoundary recentered(const DitherBoundary& b);

// Scales the region by `factor` (u -> factor*u, A -> factor^2 A,
// nu(p) -> nu(p / factor)).
DitherBoundary scaled(const DitherBoundary& b, double factor);

}  // namespace averseek::source

#endif  // AVERSEEK_BOUNDARY_HPP
