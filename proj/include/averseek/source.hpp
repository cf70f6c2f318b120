#ifndef AVERSEEK_SOURCE_HPP
#define AVERSEEK_SOURCE_HPP

#include <functional>
#include <span>
#include <vector>

#include "averseek/boundary.hpp"
#include "averseek/ode.hpp"
#include "averseek/quadrature.hpp"
#include "averseek/vec2.hpp"

// Source seeking with a planar damped point mass m q'' = -kappa q' + f.
// The force moves the mass along the boundary curve u(t/eps) of a region M
// and adds a normal push proportional to the high-passed measurement; on
// average the mass follows the gradient of the region average of psi.
namespace averseek::source {

using SignalFn = std::function<double(Vec2)>;

struct SourceParams {
  double m = 1;
  double kappa = 1;
  double c = 1;
  double omega_H = 1;
  double eps = 0.1;
  double mu = 1;  // assumed mass for the unknown-mass controller

  void validate() const;
};

// Flat layout [q1, q2, q1', q2', eta]; also used for the transformed and
// averaged states.
struct SourceState {
  Vec2 q;
  Vec2 q_dot;
  double eta = 0;

  std::vector<double> pack() const { return {q.x, q.y, q_dot.x, q_dot.y, eta}; }
  static SourceState unpack(std::span<const double> s);
};

using TransformedState = SourceState;

Vec2 control_force(const SourceParams& p, const DitherBoundary& b, double y, double eta, double t);
// Same force with the assumed mass mu in place of m.
Vec2 control_force_unknown_mass(const SourceParams& p, const DitherBoundary& b, double y,
                                double eta, double t);
// Disk specialization a(-m/eps^2 + (2c/a^2)(y - eta)) [cos(t/eps), sin(t/eps)].
Vec2 disk_force(const SourceParams& p, double radius, double y, double eta, double t);

// Rescaling that rewrites the unknown-mass force in the known-mass form:
// boundary scaled by mu/m and gain c scaled by mu/m.
struct RescaledController {
  DitherBoundary boundary;
  double c;
};
RescaledController rescale_for_unknown_mass(const SourceParams& p, const DitherBoundary& b);

void closed_loop_rhs(const SignalFn& psi, const SourceParams& p, const DitherBoundary& b,
                     std::span<const double> s, double t, std::span<double> ds);

TransformedState to_transformed(const SourceState& s, const SourceParams& p,
                                const DitherBoundary& b, double t);
SourceState from_transformed(const TransformedState& s, const SourceParams& p,
                             const DitherBoundary& b, double t);

void transformed_rhs(const SignalFn& psi, const SourceParams& p, const DitherBoundary& b,
                     std::span<const double> s, double t, std::span<double> ds);

ode::Rhs make_closed_loop(SignalFn psi, SourceParams p, DitherBoundary b);
ode::Rhs make_transformed(SignalFn psi, SourceParams p, DitherBoundary b);

class AveragedObjective2D {
 public:
  AveragedObjective2D(SignalFn psi, DitherBoundary boundary, quad::RegionRule interior,
                      double c, int boundary_nodes = 256);

  const SignalFn& psi() const { return psi_; }
  const DitherBoundary& boundary() const { return boundary_; }
  double c() const { return c_; }

  double psi_bar(Vec2 q) const;
  // Averaged force from the boundary flux; equals c * grad psi_bar.
  Vec2 G(Vec2 q) const;
  Vec2 grad_psi_bar(Vec2 q) const { return G(q) / c_; }
  Vec2 grad_psi_bar_fd(Vec2 q, double h = 1e-4) const;
  double z(Vec2 q) const;

 private:
  SignalFn psi_;
  DitherBoundary boundary_;
  quad::RegionRule interior_;
  quad::BoundaryRule flux_rule_;
  quad::LineRule periodic_;
  double c_;
};

// Disk of radius a with the default node counts.
AveragedObjective2D disk_objective(SignalFn psi, double a, double c = 1);

// Averaged system, state [q, q', eta].
void averaged_rhs(const AveragedObjective2D& obj, const SourceParams& p,
                  std::span<const double> s, std::span<double> ds);
ode::Rhs make_averaged(AveragedObjective2D obj, SourceParams p);

// max over grid of |G(q) - c * grad_fd psi_bar(q)|, central differences h = 1e-4.
double divergence_identity_residual(const AveragedObjective2D& obj, std::span<const Vec2> grid,
                                    double h = 1e-4);

double demo_signal(Vec2 q);

struct Assumption4Report {
  std::vector<Vec2> value_violations;      // psi_bar(q) >= psi_bar(q*)
  std::vector<Vec2> critical_points;       // zeros of grad psi_bar away from q*
  std::vector<Vec2> gradient_violations;   // |grad psi_bar(q)| <= tolerance on the grid
  std::vector<Vec2> direction_violations;  // grad . (q - q*) > 0 outside the C ball
  bool value_ok() const { return value_violations.empty(); }
  bool gradient_ok() const { return gradient_violations.empty() && critical_points.empty(); }
  bool direction_ok() const { return direction_violations.empty(); }
  bool holds() const { return value_ok() && gradient_ok() && direction_ok(); }
};

// Grid scan on [lo, hi]^2 with the given step. Condition (ii) is checked
// pointwise against `grad_tol` and, between grid nodes, by locating zeros
// of the gradient in cells where both components change sign.
Assumption4Report check_assumption4(const AveragedObjective2D& obj, Vec2 q_star, double lo,
                                    double hi, double step, double C_radius,
                                    double grad_tol = 1e-8);

// Period average of q over the last dither period of a q-trajectory
// (components 0 and 1), plus the largest instantaneous |q| in that window.
struct OrbitSummary {
  Vec2 mean;
  double max_radius = 0;
};
OrbitSummary final_period_orbit(const ode::Trajectory& q_traj, double dither_period_t);

// Maps a transformed trajectory back to the physical coordinates q.
ode::Trajectory map_to_physical(const ode::Trajectory& transformed, const SourceParams& p,
                                const DitherBoundary& b);

}  // namespace averseek::source

#endif  // AVERSEEK_SOURCE_HPP
