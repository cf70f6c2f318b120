#ifndef AVERSEEK_ODE_HPP
#define AVERSEEK_ODE_HPP

#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace averseek::ode {

// dx/dt = rhs(t, x); the callee writes into dxdt (same length as x).
using Rhs = std::function<void(double t, std::span<const double> x, std::span<double> dxdt)>;

enum class Mode { fixed_step, adaptive };

struct IntegratorConfig {
  Mode mode = Mode::adaptive;
  double dt = 1e-2;  // fixed-step size
  double rtol = 1e-9;
  double atol = 1e-9;
  std::size_t max_steps = 100'000'000;
  // Abort with IntegrationError::Kind::diverged once any |x_i| exceeds this.
  double max_abs_state = std::numeric_limits<double>::infinity();

  void validate() const;

  static IntegratorConfig adaptive_tol(double tol) {
    IntegratorConfig c;
    c.rtol = c.atol = tol;
    return c;
  }
  static IntegratorConfig fixed(double step) {
    IntegratorConfig c;
    c.mode = Mode::fixed_step;
    c.dt = step;
    return c;
  }
};

class IntegrationError : public std::runtime_error {
 public:
  enum class Kind { step_exhaustion, step_underflow, non_finite, diverged };

  IntegrationError(Kind kind, double t, const std::string& what)
      : std::runtime_error(what), kind_(kind), time_(t) {}

  Kind kind() const { return kind_; }
  double time() const { return time_; }

 private:
  Kind kind_;
  double time_;
};

const char* to_string(IntegrationError::Kind kind);

// Time grid plus state samples. States are stored row-major; derivative
// samples are optional and, when present, feed the Hermite dense output.
class Trajectory {
 public:
  Trajectory(std::vector<double> times, std::vector<double> states, std::size_t dimension,
             std::vector<double> derivatives = {});

  std::size_t size() const { return times_.size(); }
  std::size_t dimension() const { return dim_; }
  const std::vector<double>& times() const { return times_; }
  double time(std::size_t i) const { return times_[i]; }
  double front_time() const { return times_.front(); }
  double back_time() const { return times_.back(); }

  std::span<const double> state(std::size_t i) const {
    return {states_.data() + i * dim_, dim_};
  }
  std::span<const double> back_state() const { return state(size() - 1); }
  bool has_derivatives() const { return !derivs_.empty(); }
  std::span<const double> derivative(std::size_t i) const {
    return {derivs_.data() + i * dim_, dim_};
  }

  // Component `k` across all samples.
  std::vector<double> component(std::size_t k) const;

  std::map<std::string, std::string>& metadata() { return metadata_; }
  const std::map<std::string, std::string>& metadata() const { return metadata_; }

 private:
  std::vector<double> times_;
  std::vector<double> states_;
  std::vector<double> derivs_;
  std::size_t dim_;
  std::map<std::string, std::string> metadata_;
};

Trajectory integrate(const Rhs& rhs, std::span<const double> x0, double t0, double t1,
                     const IntegratorConfig& cfg);

// Cubic Hermite interpolation onto `grid`. Uses stored derivatives when the
// trajectory has them, otherwise three-point finite-difference slopes.
Trajectory resample(const Trajectory& traj, std::span<const double> grid);

// Interpolated state at a single time inside the span of `traj`.
std::vector<double> interpolate(const Trajectory& traj, double t);

std::vector<double> uniform_grid(double t0, double t1, std::size_t n);

}  // namespace averseek::ode

#endif  // AVERSEEK_ODE_HPP
