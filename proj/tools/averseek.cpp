#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "averseek/harness.hpp"
#include "averseek/quadrature.hpp"

namespace h = averseek::harness;

namespace {

struct Globals {
  std::optional<std::string> out;
  unsigned jobs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
};

void apply(const Globals& g, h::ScenarioConfig& c) {
  if (g.tol) c.integrator.rtol = c.integrator.atol = *g.tol;
  if (g.seed) c.seed = *g.seed;
}

void print_artifacts(const h::ScenarioResult& r) {
  for (const auto& p : r.artifacts) std::printf("wrote %s\n", p.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"averseek: extremum seeking and source seeking simulations"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--out", g.out, "output directory (default: $AVERSEEK_OUT or ./averseek_out)");
  app.add_option("--jobs", g.jobs, "concurrent jobs for sweeps and probes")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "seed for sampled initial conditions");
  app.add_option("--tol", g.tol, "integrator rtol = atol override")->check(CLI::PositiveNumber);

  std::string config, figure, grid;
  auto* simulate = app.add_subcommand("simulate", "run one scenario from a JSON config");
  simulate->add_option("config", config, "scenario config")->required();
  auto* reproduce = app.add_subcommand("reproduce", "reproduce a built-in figure (or 'all')");
  reproduce->add_option("figure", figure, "fig2a, fig2b, fig3, fig4-center, fig4-right, all")->required();
  auto* sweep = app.add_subcommand("sweep", "run a scenario over a parameter grid");
  sweep->add_option("config", config, "base scenario config")->required();
  sweep->add_option("--grid", grid, "grid JSON")->required();
  auto* verify = app.add_subcommand("verify", "run the identity battery");
  auto* probe = app.add_subcommand("probe", "empirical practical-stability probe");
  probe->add_option("config", config, "probe config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : h::exit_config;
  }

  const auto out = h::resolve_out_dir(g.out);
  try {
    if (*simulate) {
      auto cfg = h::load_config(config);
      apply(g, cfg);
      cfg.validate();
      const auto r = h::run_scenario(cfg, out);
      print_artifacts(r);
      std::printf("%s\n", r.summary.at("metrics").dump().c_str());
    } else if (*reproduce) {
      std::vector<std::string> ids;
      if (figure == "all") {
        ids = h::figure_ids();
      } else {
        ids = {figure};
      }
      for (const auto& id : ids) {
        const auto r = h::reproduce_figure(id, out, g.tol);
        print_artifacts(r);
        std::printf("%s: %s\n", id.c_str(), r.summary.at("metrics").dump().c_str());
      }
    } else if (*sweep) {
      auto cfg = h::load_config(config);
      apply(g, cfg);
      cfg.validate();
      const auto r = h::sweep(cfg, h::load_json(grid), out, g.jobs);
      std::printf("wrote %s\n", r.table.string().c_str());
      for (std::size_t i = 0; i < r.rows.size(); ++i) {
        if (!r.rows[i].ok) std::printf("row %zu failed: %s\n", i, r.rows[i].error.c_str());
      }
      return r.all_ok() ? h::exit_ok : h::exit_numerical;
    } else if (*verify) {
      const auto r = h::verify(out, g.tol.value_or(1e-9));
      for (const auto& c : r.checks) {
        std::printf("%-28s %s  value=%.3e  threshold=%.1e\n", c.name.c_str(),
                    c.passed ? "PASS" : "FAIL", c.value, c.threshold);
      }
      return r.passed() ? h::exit_ok : h::exit_numerical;
    } else if (*probe) {
      auto cfg = h::ProbeConfig::from_json(h::load_json(config));
      if (g.seed) cfg.settings.seed = *g.seed;
      if (g.jobs > 1) cfg.settings.jobs = g.jobs;
      if (g.tol) std::fprintf(stderr, "note: --tol does not apply to probe families\n");
      const auto r = h::run_probe(cfg, out);
      for (const auto& e : r.table) {
        std::printf("eps=%-10g %s  failures=%zu/%zu\n", e.eps, e.passed ? "PASS" : "FAIL", e.failures,
                    e.runs.size());
      }
      for (const auto& w : r.warnings) std::printf("warning: %s\n", w.c_str());
      if (r.eps_passed) {
        std::printf("largest passing eps: %g\n", *r.eps_passed);
      } else {
        std::printf("no tested eps passed\n");
      }
    }
  } catch (const h::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return h::exit_config;
  } catch (const averseek::ode::IntegrationError& e) {
    std::fprintf(stderr, "numerical failure (%s at t=%g): %s\n", averseek::ode::to_string(e.kind()),
                 e.time(), e.what());
    return h::exit_numerical;
  } catch (const averseek::quad::QuadratureError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return h::exit_numerical;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return h::exit_config;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return h::exit_numerical;
  }
  return h::exit_ok;
}
