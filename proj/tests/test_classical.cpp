#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"

#include "averseek/classical.hpp"
#include "oracles.hpp"

using namespace averseek;
using namespace averseek::classical;
using std::numbers::pi;

namespace {

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i <= n; ++i) g.push_back(lo + (hi - lo) * i / n);
  return g;
}

AveragedObjective1D demo_obj(double a) { return {demo_psi, a, ScalarFn(demo_dpsi)}; }

ClassicalGains gains(double eps, double a) {
  ClassicalGains g;
  g.eps = eps;
  g.a = a;
  return g;
}

double mean_theta_last_period(const ode::Trajectory& traj, std::size_t k, double t_end, double period) {
  const auto g = ode::uniform_grid(t_end - period, t_end, 2001);
  double s = 0;
  for (double t : g) s += ode::interpolate(traj, t)[k];
  return s / static_cast<double>(g.size());
}

}  // namespace

TEST_CASE("demo plant steady state and critical points") {
  const auto plant = demo_plant();
  for (double th : {-2.0, 0.0, 3.0, 0.37}) {
    const auto x = plant.l(th);
    std::vector<double> dx(2);
    plant.f(x, plant.alpha(x, th), dx);
    CHECK(std::abs(dx[0]) < 1e-9);
    CHECK(std::abs(dx[1]) < 1e-9);
  }
  CHECK(steady_state_output(plant, 1) == doctest::Approx(161.0 / 15).epsilon(1e-14));
  CHECK(steady_state_output(plant, 0) == 10);
  CHECK(std::abs(steady_state_output(plant, -0.6) - 10.1872) < 1e-12);
  CHECK(std::abs(demo_dpsi(1)) < 1e-14);
  CHECK(std::abs(demo_dpsi(-0.6)) < 1e-14);
  for (double th : grid(-2, 2, 40)) CHECK(demo_psi(th) == doctest::Approx(oracle::poly(oracle::demo_poly(), th)));

  ClassicalPlant flat = plant;
  flat.h = [](std::span<const double>) { return 4.2; };
  CHECK(steady_state_output(flat, 1.3) == 4.2);
}

TEST_CASE("zero amplitude equilibrium of the closed loop") {
  const auto plant = demo_plant();
  const auto g = gains(0.01, 0.7);
  for (double th : {-1.0, 0.3}) {
    auto s = demo_initial_state(plant, th, plant.l(th), 0.0).pack(true);
    std::vector<double> ds(s.size());
    for (double t : {0.0, 12.5, 400.0}) {
      closed_loop_rhs(plant, g, s, t, true, ds);
      for (double d : ds) CHECK(std::abs(d) < 1e-12);
    }
  }
}

TEST_CASE("filters decay at their rates when the dither is off") {
  const auto plant = demo_plant();
  const auto g = gains(0.05, 0.7);
  ClassicalState st;
  st.x = plant.l(0.4);
  st.theta_hat = 0.4;
  st.xi = 0.8;
  st.eta = -3;
  st.a = 0;
  const auto s = st.pack(true);
  std::vector<double> ds(s.size());
  closed_loop_rhs(plant, g, s, 1.7, true, ds);
  const double y = steady_state_output(plant, 0.4);
  CHECK(ds[xi_index(plant)] == doctest::Approx(-g.eps * g.omega_L * 0.8));
  CHECK(ds[eta_index(plant)] == doctest::Approx(-g.eps * g.omega_H * (-3 - y)));
  CHECK(ds[theta_index(plant)] == doctest::Approx(g.eps * g.K * 0.8));
}

TEST_CASE("paper setup initial state") {
  const auto plant = demo_plant();
  const auto st = demo_initial_state(plant, -1, {0, 0}, 0.7);
  CHECK(st.eta == 10);
  CHECK(st.xi == 0);
  CHECK(st.theta_hat == -1);
  const auto packed = st.pack(false);
  CHECK(packed.size() == 5);
  const auto back = ClassicalState::unpack(packed, 2, false, 0.7);
  CHECK(back.a == 0.7);
  CHECK(back.eta == 10);
  CHECK_THROWS_AS(ClassicalState::unpack(packed, 2, true), std::invalid_argument);
}

TEST_CASE("time-t and tau forms agree under reparametrization") {
  const auto plant = demo_plant();
  const auto g = gains(0.1, 0.7);
  const auto x0 = demo_initial_state(plant, -1, {0, 0}, g.a).pack(false);
  const double tau_end = 6;
  const double tol = 1e-10;
  const auto in_t = ode::integrate(make_closed_loop(plant, g, false), x0, 0, tau_end / g.eps,
                                   ode::IntegratorConfig::adaptive_tol(tol));
  const auto in_tau = ode::integrate(make_time_scaled(plant, g), x0, 0, tau_end,
                                     ode::IntegratorConfig::adaptive_tol(tol));
  double worst = 0;
  for (double tau : ode::uniform_grid(0, tau_end, 61)) {
    const auto a = ode::interpolate(in_t, tau / g.eps);
    const auto b = ode::interpolate(in_tau, tau);
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  }
  CHECK(worst < 100 * tol);
}

TEST_CASE("period-averaged time-scaled rhs vanishes at the averaged equilibrium") {
  const auto plant = demo_plant();
  const auto g = gains(0.01, 0.7);
  const double star = demo_psi_bar_argmax(0.7);
  ClassicalState st;
  st.x = plant.l(star);
  st.theta_hat = star;
  st.xi = 0;
  st.eta = demo_obj(0.7).z(star);
  const auto s = st.pack(false);
  const auto avg = quad::periodic_average(
      [&](double tau) {
        std::vector<double> ds(s.size());
        time_scaled_rhs(plant, g, s, tau, ds);
        return ds;
      },
      2 * pi, 256);
  CHECK(std::abs(avg[theta_index(plant)]) < 1e-12);
  CHECK(std::abs(avg[xi_index(plant)]) < 1e-9);
}

TEST_CASE("reduced system") {
  const auto g = gains(0.01, 0.3);
  SUBCASE("constant psi gives no drive") {
    const auto traj = ode::integrate(make_reduced([](double) { return 2.0; }, g), std::vector<double>{0.4, 0, 2}, 0,
                                     50, ode::IntegratorConfig::adaptive_tol(1e-9));
    for (std::size_t i = 0; i < traj.size(); ++i) {
      CHECK(traj.state(i)[0] == doctest::Approx(0.4));
      CHECK(std::abs(traj.state(i)[1]) < 1e-12);
    }
  }
  SUBCASE("linear psi drifts upward like the averaged system") {
    const double horizon = 400;
    const auto red = ode::integrate(make_reduced([](double t) { return t; }, g), std::vector<double>{0, 0, 0}, 0,
                                    horizon, ode::IntegratorConfig::adaptive_tol(1e-9));
    const AveragedObjective1D lin([](double t) { return t; }, 0.3);
    const auto avg = ode::integrate(make_averaged(lin, g), std::vector<double>{0, 0, 0}, 0, horizon,
                                    ode::IntegratorConfig::adaptive_tol(1e-9));
    const double v_red = red.back_state()[0] / horizon;
    const double v_avg = avg.back_state()[0] / horizon;
    CHECK(v_red > 0);
    CHECK(v_avg == doctest::Approx(0.045).epsilon(0.01));
    // The reduced loop's high-pass lag only removes part of the drive.
    CHECK(v_red < v_avg);
    CHECK(v_red > 0.25 * v_avg);
  }
  SUBCASE("demo psi settles near the averaged maximizer") {
    const auto gd = gains(0.01, 0.7);
    const double horizon = 150;
    const auto red = ode::integrate(make_reduced(demo_psi, gd), std::vector<double>{-1, 0, 10}, 0, horizon,
                                    ode::IntegratorConfig::adaptive_tol(1e-9));
    CHECK(std::abs(mean_theta_last_period(red, 0, horizon, 2 * pi) - 0.8) < 0.05);
  }
}

TEST_CASE("averaged system") {
  SUBCASE("linear psi gives the constant drive a^2/2") {
    const AveragedObjective1D lin([](double t) { return t; }, 0.3);
    for (double th : {-5.0, 0.0, 2.5}) CHECK(std::abs(lin.G(th) - 0.045) < 1e-14);
  }
  SUBCASE("cascade equilibrium") {
    const auto obj = demo_obj(0.7);
    const double star = demo_psi_bar_argmax(0.7);
    CHECK(std::abs(obj.G(star)) < 1e-12);
    const std::vector<double> s{star, 0, obj.z(star)};
    std::vector<double> ds(3);
    averaged_rhs(obj, gains(0.01, 0.7), s, ds);
    for (double d : ds) CHECK(std::abs(d) < 1e-12);
  }
  SUBCASE("demo converges to the unique maximizer near 0.8") {
    const auto obj = demo_obj(0.7);
    int sign_changes = 0;
    const auto g = grid(-3, 3, 600);
    for (std::size_t i = 1; i < g.size(); ++i) sign_changes += (obj.G(g[i - 1]) > 0) != (obj.G(g[i]) > 0);
    CHECK(sign_changes == 1);
    const auto traj = ode::integrate(make_averaged(obj, gains(0.01, 0.7)), std::vector<double>{-1, 0, 10}, 0, 150,
                                     ode::IntegratorConfig::adaptive_tol(1e-9));
    CHECK(std::abs(traj.back_state()[0] - demo_psi_bar_argmax(0.7)) < 1e-4);
    CHECK(std::abs(traj.back_state()[0] - 0.8) < 0.05);
  }
}

TEST_CASE("gradient identity with constant one half") {
  SUBCASE("linear psi") {
    const AveragedObjective1D lin([](double t) { return t; }, 0.3, ScalarFn([](double) { return 1.0; }));
    const auto fit = gradient_identity_residual(lin, grid(-2, 2, 40));
    CHECK(fit.fitted);
    CHECK(fit.C_fit == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fit.max_residual < 1e-13);
  }
  SUBCASE("demo quartic against a brute-force dither correlation") {
    const auto obj = demo_obj(0.7);
    const auto g = grid(-2, 2, 20);
    const auto fit = gradient_identity_residual(obj, g);
    CHECK(fit.C_fit == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fit.max_residual < 1e-10);
    for (double th : g) {
      const double brute = oracle::trapezoid(
          [&](double tau) { return demo_psi(th + 0.7 * std::sin(tau)) * 0.7 * std::sin(tau); }, 0, 2 * pi,
          1'000'000) / (2 * pi);
      CHECK(std::abs(obj.G(th) - brute) < 1e-10);
      CHECK(std::abs(obj.G(th) - oracle::poly_dither_correlation(oracle::demo_poly(), th, 0.7)) < 1e-11);
    }
  }
  SUBCASE("constant psi skips the fit") {
    const AveragedObjective1D flat([](double) { return 3.0; }, 0.5, ScalarFn([](double) { return 0.0; }));
    const auto fit = gradient_identity_residual(flat, grid(-1, 1, 10));
    CHECK_FALSE(fit.fitted);
    CHECK(fit.max_residual < 1e-15);
    CHECK(flat.psi_bar(0.2) == doctest::Approx(3.0).epsilon(1e-15));
  }
  SUBCASE("random polynomials up to degree six") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> coef(-2, 2);
    std::uniform_int_distribution<int> deg(0, 6);
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<double> c(static_cast<std::size_t>(deg(gen)) + 1);
      for (auto& v : c) v = coef(gen);
      const ScalarFn p = [c](double t) { return oracle::poly(c, t); };
      const ScalarFn dp = [c](double t) { return oracle::poly_derivative(c, t); };
      for (double a : {0.1, 0.4, 0.7, 1.0}) {
        const AveragedObjective1D obj(p, a, dp);
        const auto g = grid(-2, 2, 16);
        CHECK(gradient_identity_max_residual(obj, g) < 1e-10);
        for (double th : g) {
          CHECK(std::abs(obj.psi_bar(th) - oracle::poly_semicircle_average(c, th, a)) < 1e-10);
        }
      }
    }
  }
  CHECK_THROWS_AS(gradient_identity_residual(demo_obj(0.7), std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("closed-form demo average") {
  for (double a : {0.4, 0.7, 1.0}) {
    const auto obj = demo_obj(a);
    for (double th : grid(-2, 2, 80)) {
      CHECK(std::abs(demo_psi_bar_closed_form(a, th) - obj.psi_bar(th)) < 1e-11);
      CHECK(std::abs(demo_psi_bar_closed_form(a, th) - oracle::poly_semicircle_average(oracle::demo_poly(), th, a)) <
            1e-11);
    }
  }
  CHECK(std::abs(demo_psi_bar_closed_form(1, 0) - 10.175) < 1e-14);
  for (double th : {-1.3, 0.0, 0.9}) CHECK(demo_psi_bar_closed_form(0, th) == demo_psi(th));

  double best = -1e300, arg = 0;
  for (double th : grid(-2, 2, 4000)) {
    const double v = demo_psi_bar_closed_form(0.7, th);
    if (v > best) best = v, arg = th;
  }
  CHECK(std::abs(arg - 0.8) < 0.05);
  CHECK(std::abs(demo_psi_bar_argmax(0.7) - arg) < 1e-3);
  CHECK(std::abs(demo_psi_bar_argmax(1e-9) - 1.0) < 1e-8);
}

TEST_CASE("averaged-objective sign condition") {
  const auto scan = [](double star) {
    std::vector<double> g;
    for (double th : grid(-3, 3, 600)) {
      if (std::abs(th - star) > 1e-9) g.push_back(th);
    }
    return g;
  };
  const double s7 = demo_psi_bar_argmax(0.7);
  CHECK(check_assumption3(demo_obj(0.7), s7, scan(s7)).holds);

  const double s4 = demo_psi_bar_argmax(0.4);
  const auto r4 = check_assumption3(demo_obj(0.4), s4, scan(s4));
  CHECK_FALSE(r4.holds);
  bool near = false;
  for (double v : r4.violations) near = near || std::abs(v + 0.5) < 0.2;
  CHECK(near);

  const AveragedObjective1D concave([](double t) { return -t * t; }, 0.9, ScalarFn([](double t) { return -2 * t; }));
  CHECK(check_assumption3(concave, 0, scan(0)).holds);
}

TEST_CASE("gains validation") {
  auto g = gains(0.01, 0.7);
  CHECK_NOTHROW(g.validate());
  CHECK(g.k() == doctest::Approx(0.01));
  g.omega_L = 0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  CHECK_THROWS_AS(make_closed_loop(demo_plant(), g, false), std::invalid_argument);
  CHECK_THROWS_AS(AveragedObjective1D(demo_psi, 0), std::invalid_argument);
}

// Registered as its own ctest entry and excluded from the main unit run.
TEST_CASE("classical eps refinement: terminal distance to the argmax") {
  const auto plant = demo_plant();
  const double star = demo_psi_bar_argmax(0.7);
  std::vector<double> dist;
  for (double eps : {1.0 / 25, 1.0 / 50, 1.0 / 100}) {
    const auto g = gains(eps, 0.7);
    const auto x0 = demo_initial_state(plant, -1, {0, 0}, g.a).pack(false);
    const auto traj = ode::integrate(make_closed_loop(plant, g, false), x0, 0, 150 / eps,
                                     ode::IntegratorConfig::adaptive_tol(1e-6));
    dist.push_back(std::abs(traj.back_state()[theta_index(plant)] - star));
    MESSAGE("eps = " << eps << ": |theta_hat(end) - theta*| = " << dist.back());
  }
  CHECK(dist[1] <= dist[0]);
  CHECK(dist[2] <= dist[1]);
}
