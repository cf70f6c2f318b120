#ifndef AVERSEEK_STABILITY_HPP
#define AVERSEEK_STABILITY_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "averseek/classical.hpp"
#include "averseek/ode.hpp"
#include "averseek/source.hpp"

// Damped gradient systems x' = v, v' = -k v - grad V(x), their Lyapunov
// functions, and an empirical probe of semi-global practical stability.
namespace averseek::stability {

using Potential = std::function<double(std::span<const double>)>;
using Gradient = std::function<std::vector<double>(std::span<const double>)>;

struct LyapunovSystem {
  int n = 0;
  double k = 1;
  Potential V;
  Gradient grad_V;
  std::vector<double> x_star;
  double C_radius = 0;
};

// State layout [x_0 .. x_{n-1}, v_0 .. v_{n-1}].
void damped_gradient_rhs(const LyapunovSystem& sys, std::span<const double> s, std::span<double> ds);
ode::Rhs make_rhs(LyapunovSystem sys);

// E = |v|^2/2 + V(x).
double energy(const LyapunovSystem& sys, std::span<const double> x, std::span<const double> v);
// B = (1+k^2) V(x) + 1/2 [x-x*; v]^T [[k^2 I, k I], [k I, (1+k^2) I]] [x-x*; v].
double b_function(const LyapunovSystem& sys, std::span<const double> x, std::span<const double> v);
// -k |v|^2
double energy_rate(const LyapunovSystem& sys, std::span<const double> x, std::span<const double> v);
// -k^3 |v|^2 - k grad V(x)^T (x - x*)
double b_rate(const LyapunovSystem& sys, std::span<const double> x, std::span<const double> v);

struct SystemCheck {
  double V_at_star = 0;
  double grad_at_star = 0;
  std::vector<std::size_t> nonpositive_V;  // sample indices with V <= 0
  std::vector<std::size_t> vanishing_grad;
  bool ok(double tol = 1e-12) const;
};

// Samples are points x != x*; each must have V > 0 and grad V != 0.
SystemCheck check_system(const LyapunovSystem& sys, std::span<const std::vector<double>> samples,
                         double grad_tol = 1e-12);

struct DissipationReport {
  std::size_t samples = 0;
  double max_E_mismatch = 0;      // |dE/dt_fd - (-k|v|^2)|
  double max_B_mismatch = 0;      // |dB/dt_fd - formula|
  double max_E_rate = 0;          // max dE/dt_fd
  double max_B_rate_outside = 0;  // max dB/dt_fd with |x - x*| > C_radius
  double max_B_excess_outside = 0;  // max B - B(0) with |x - x*| > C_radius
  bool ok(double tol) const {
    return max_E_mismatch <= tol && max_B_mismatch <= tol && max_E_rate <= tol &&
           max_B_rate_outside <= tol;
  }
};

// Differentiates E and B along the samples with five-point finite
// differences (weights for the actual, possibly nonuniform, time stamps).
// Only the first 2n components of each state are used. Throws
// std::invalid_argument when the trajectory has fewer than five samples.
DissipationReport check_dissipation(const LyapunovSystem& sys, const ode::Trajectory& traj);

// Finite-difference weights for the first derivative at `at` from the
// given stencil (Fornberg's recursion).
std::vector<double> fd_weights(std::span<const double> stencil, double at);

// Averaged classical system: k = omega_L, V = K omega_L (a^2/2)(psi_bar* - psi_bar).
LyapunovSystem classical_instance(const classical::AveragedObjective1D& obj,
                                  const classical::ClassicalGains& gains, double theta_star,
                                  double C_radius);
// Averaged source system: k = kappa/m, V = (c/m)(psi_bar_M(q*) - psi_bar_M).
LyapunovSystem source_instance(const source::AveragedObjective2D& obj,
                               const source::SourceParams& p, Vec2 q_star, double C_radius);

struct KLEnvelope {
  double C = 1;
  double lambda = 1;
  double operator()(double r, double t) const;
};

struct DecaySample {
  double r;  // initial distance
  double t;  // time since t0
  double d;  // distance at t
};

// Least squares on log(d/r) = log C - lambda t. Returns nullopt when the
// data do not determine a decaying envelope.
std::optional<KLEnvelope> fit_kl_envelope(std::span<const DecaySample> samples);

// Family of systems indexed by eps, probed around a target in observed
// coordinates. Offsets have length 2 * position_dim: position then velocity.
struct ProbeFamily {
  std::string name;
  std::function<ode::Rhs(double eps)> rhs;
  std::function<std::vector<double>(std::span<const double> offset, double eps, double t0)>
      initial_state;
  std::function<std::vector<double>(std::span<const double> state)> observe;
  std::vector<double> target;
  std::size_t position_dim = 1;
  std::function<double(double eps)> dither_period;
  std::function<double(double eps)> horizon;
  ode::IntegratorConfig integrator;
};

struct ProbeSettings {
  double r = 1;
  double delta = 0.1;
  std::vector<double> eps_list;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  double hysteresis = 0.1;
};

struct ProbeRun {
  std::size_t sample = 0;
  double t0 = 0;
  bool passed = false;
  double entry_time = -1;  // start of the final stay inside, -1 if none
  double final_distance = 0;
  std::string failure;
};

struct EpsResult {
  double eps = 0;
  bool passed = false;
  std::size_t failures = 0;
  std::vector<ProbeRun> runs;
};

struct SgpuasReport {
  double r = 0;
  double delta = 0;
  std::optional<double> eps_passed;
  std::vector<EpsResult> table;
  std::optional<KLEnvelope> envelope;
  std::vector<std::string> warnings;
};

// 16 offsets: 8 on the radius-r position sphere at rest, then 8 drawn in
// the joint position/velocity ball of radius r.
std::vector<std::vector<double>> probe_offsets(std::size_t position_dim, double r,
                                               std::uint64_t seed);

SgpuasReport sgpuas_probe(const ProbeFamily& family, const ProbeSettings& settings);

// Classical demo in the dither time tau, observing theta_hat.
ProbeFamily classical_probe_family(double a, double theta_star, double horizon_tau = 150);
// Source demo on a disk of radius a through the transformed system, observing q~.
ProbeFamily source_probe_family(double a, Vec2 q_star, double horizon_t = 100);

}  // namespace averseek::stability

#endif  // AVERSEEK_STABILITY_HPP
