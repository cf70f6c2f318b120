#ifndef AVERSEEK_CLASSICAL_HPP
#define AVERSEEK_CLASSICAL_HPP

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "averseek/ode.hpp"
#include "averseek/quadrature.hpp"

// Classical perturbation-based extremum seeking for steady-state output
// maximization, with the filter gains scaled by the dither frequency:
//
//   x'     = f(x, alpha(x, theta_hat + a sin(eps t)))
//   theta' = eps K xi
//   xi'    = -eps wL xi + eps wL (h(x) - eta) a sin(eps t)
//   eta'   = -eps wH eta + eps wH h(x)
//
// In the dither time tau = eps t the (theta, xi) pair is a damped double
// integrator; averaging over one dither period drives it with the gradient
// of the semicircle-kernel average of psi = h o l.
namespace averseek::classical {

using ScalarFn = std::function<double(double)>;

struct ClassicalPlant {
  int n = 0;
  std::function<void(std::span<const double> x, double u, std::span<double> dx)> f;
  std::function<double(std::span<const double> x)> h;
  std::function<double(std::span<const double> x, double theta)> alpha;
  std::function<std::vector<double>(double theta)> l;
};

struct ClassicalGains {
  double eps = 0.01;
  double a = 0.7;
  double omega_H = 1;
  double omega_L = 1;
  double K = 1;

  void validate() const;
  double omega_h() const { return eps * omega_H; }
  double omega_l() const { return eps * omega_L; }
  double k() const { return eps * K; }
};

// Flat state layout: [x_0 .. x_{n-1}, theta_hat, xi, eta, (a)].
struct ClassicalState {
  std::vector<double> x;
  double theta_hat = 0;
  double xi = 0;
  double eta = 0;
  double a = 0;

  std::vector<double> pack(bool amplitude_state) const;
  static ClassicalState unpack(std::span<const double> s, int n, bool amplitude_state,
                               double frozen_a = 0);
};

inline std::size_t theta_index(const ClassicalPlant& p) { return static_cast<std::size_t>(p.n); }
inline std::size_t xi_index(const ClassicalPlant& p) { return static_cast<std::size_t>(p.n) + 1; }
inline std::size_t eta_index(const ClassicalPlant& p) { return static_cast<std::size_t>(p.n) + 2; }
inline std::size_t amplitude_index(const ClassicalPlant& p) { return static_cast<std::size_t>(p.n) + 3; }

// Closed loop in the original time t. With `decay` the state carries the
// amplitude as a last component obeying a' = -eps^2 a; otherwise gains.a is used.
void closed_loop_rhs(const ClassicalPlant& plant, const ClassicalGains& gains,
                     std::span<const double> s, double t, bool decay, std::span<double> ds);

// Same system in tau = eps t (plant equation divided by eps).
void time_scaled_rhs(const ClassicalPlant& plant, const ClassicalGains& gains,
                     std::span<const double> s, double tau, std::span<double> ds);

// Reduced system, state [theta, theta', eta].
void reduced_rhs(const ScalarFn& psi, const ClassicalGains& gains, std::span<const double> s,
                 double tau, std::span<double> ds);

ode::Rhs make_closed_loop(ClassicalPlant plant, ClassicalGains gains, bool decay);
ode::Rhs make_time_scaled(ClassicalPlant plant, ClassicalGains gains);
ode::Rhs make_reduced(ScalarFn psi, ClassicalGains gains);

// Quadrature-backed evaluators of the averaged objects for fixed amplitude a.
class AveragedObjective1D {
 public:
  AveragedObjective1D(ScalarFn psi, double a, std::optional<ScalarFn> dpsi = std::nullopt,
                      int semicircle_nodes = 64, int periodic_nodes = 256);

  double a() const { return a_; }
  const ScalarFn& psi() const { return psi_; }

  double psi_bar(double theta) const;
  // Semicircle average of psi' when available, else a central difference
  // of psi_bar with h = 1e-5.
  double dpsi_bar(double theta) const;
  // (1/2pi) int psi(theta + a sin tau) a sin tau dtau
  double G(double theta) const;
  // (1/2pi) int psi(theta + a sin tau) dtau
  double z(double theta) const;

 private:
  ScalarFn psi_;
  std::optional<ScalarFn> dpsi_;
  double a_;
  quad::LineRule semicircle_;
  quad::LineRule periodic_;
};

// Averaged system, state [theta_bar, theta_bar', eta_bar].
void averaged_rhs(const AveragedObjective1D& obj, const ClassicalGains& gains,
                  std::span<const double> s, std::span<double> ds);
ode::Rhs make_averaged(AveragedObjective1D obj, ClassicalGains gains);

struct GradientIdentityFit {
  double C_fit = 0;
  double max_residual = 0;  // max |G(theta) - C_fit a^2 psi_bar'(theta)|
  bool fitted = false;      // false when psi_bar' vanishes on the whole grid
};

// Least-squares fit of C in G_a = C a^2 psi_bar_a'. Throws on an empty grid.
GradientIdentityFit gradient_identity_residual(const AveragedObjective1D& obj,
                                               std::span<const double> grid);

// Same, but reports the residual against the fixed constant C = 1/2.
double gradient_identity_max_residual(const AveragedObjective1D& obj, std::span<const double> grid);

ClassicalPlant demo_plant();
double demo_psi(double theta);
double demo_dpsi(double theta);
double demo_psi_bar_closed_form(double a, double theta);
// Global maximizer of the closed-form average (largest real critical point
// that maximizes it).
double demo_psi_bar_argmax(double a);

double steady_state_output(const ClassicalPlant& plant, double theta);

struct Assumption3Report {
  bool holds = true;
  std::vector<double> violations;
};

// Checks psi_bar'(theta) (theta - theta_star) < 0 on every grid point.
Assumption3Report check_assumption3(const AveragedObjective1D& obj, double theta_star,
                                    std::span<const double> grid);

// Initial state of the demo setup: x = x0, xi = 0, eta = h(x0).
ClassicalState demo_initial_state(const ClassicalPlant& plant, double theta_hat0,
                                  std::vector<double> x0, double a0);

}  // namespace averseek::classical

#endif  // AVERSEEK_CLASSICAL_HPP
