// sppctl: run experiments, emit config templates, estimate the regularity
// constant and print stepsize/iteration plans.
#include "spp/harness.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

enum Exit { kOk = 0, kConfigError = 1, kRuntimeError = 2 };

struct PlanArgs {
  double eps = 0.0;
  std::string config;
  double mu0 = 1.0;
  double gamma = 1.0;
  std::size_t probes = 200;
  std::optional<double> r0, kappa, lipschitz_sq, eta_sq, dist0, grad_norm, sigma;
};

int cmd_run(const std::string& path, std::size_t workers, const std::string& output) {
  spp::ExperimentConfig config = spp::load_config(path);
  if (!output.empty()) config.output_dir = output;
  spp::RunOptions options;
  options.workers = workers;
  const spp::ExperimentResult result = spp::run_experiment(config, options);
  for (const auto& cell : result.cells) {
    std::printf("%-28s runs=%zu diverged=%zu final=%s\n", cell.cell.id().c_str(), cell.runs,
                cell.diverged,
                cell.rows.empty() ? "n/a"
                                  : spp::format_number(cell.plotted == "sqdist"
                                                           ? cell.rows.back().mean_sqdist
                                                           : cell.rows.back().mean_obj)
                                        .c_str());
  }
  for (const auto& f : result.files) std::printf("wrote %s\n", f.c_str());
  return kOk;
}

int cmd_gen_config(const std::string& family, const std::string& output) {
  spp::Family f;
  try {
    f = spp::parse_family(family);
  } catch (const std::invalid_argument& e) {
    throw spp::ConfigError(e.what());
  }
  const std::string text = spp::config_template(f);
  if (output.empty() || output == "-") {
    std::cout << text;
  } else {
    std::ofstream out(output);
    if (!out || !(out << text)) throw std::runtime_error("cannot write '" + output + "'");
  }
  return kOk;
}

int cmd_estimate_kappa(const std::string& path, std::size_t probes, std::uint64_t seed) {
  const spp::ExperimentConfig config = spp::load_config(path);
  const spp::StochasticProblem problem = spp::build_problem(config);
  if (problem.set_count() == 0) {
    std::printf("kappa_hat = 1 (no constraint sets)\n");
    return kOk;
  }
  spp::RandomSource rng(seed);
  const spp::KappaEstimate est = spp::estimate_kappa(problem, probes, rng);
  std::printf("kappa_hat (lower bound) = %s\nprobes used = %zu, skipped = %zu\n",
              spp::format_number(est.kappa).c_str(), est.used, est.skipped);
  return kOk;
}

int cmd_plan(const PlanArgs& a) {
  spp::ProblemConstants c;
  if (!a.config.empty()) {
    const spp::ExperimentConfig config = spp::load_config(a.config);
    const spp::StochasticProblem problem = spp::build_problem(config);
    double kappa = 1.0;
    if (problem.kappa_override()) {
      kappa = *problem.kappa_override();
    } else if (problem.set_count() > 0) {
      spp::RandomSource rng(config.base_seed);
      kappa = spp::estimate_kappa(problem, a.probes, rng).kappa;
    }
    c = spp::measure_constants(problem, problem.initial_point(), kappa, a.mu0, a.gamma);
  }
  c.mu0 = a.mu0;
  c.gamma = a.gamma;
  if (a.r0) c.r0 = a.r0;
  if (a.kappa) c.kappa = a.kappa;
  if (a.lipschitz_sq) c.mean_sq_lipschitz = a.lipschitz_sq;
  if (a.eta_sq) c.eta_sq = a.eta_sq;
  if (a.dist0) c.dist_x0 = a.dist0;
  if (a.grad_norm) c.grad_F_norm = a.grad_norm;
  if (a.sigma) {
    c.sigmas = {*a.sigma};
    c.weights.clear();
  }

  std::printf("epsilon = %s, mu0 = %s, gamma = %s\n", spp::format_number(a.eps).c_str(),
              spp::format_number(a.mu0).c_str(), spp::format_number(a.gamma).c_str());
  auto section = [](const char* name, auto&& body) {
    try {
      body();
    } catch (const spp::MissingConstantsError& e) {
      std::printf("%s: unavailable (%s)\n", name, e.what());
    } catch (const std::domain_error& e) {
      std::printf("%s: unavailable (%s)\n", name, e.what());
    }
  };
  section("constant-step plan", [&] {
    const spp::ConstantStepPlan p = spp::constant_step_plan(a.eps, c);
    std::printf("constant-step plan: mu = %s, K = %llu\n", spp::format_number(p.mu).c_str(),
                static_cast<unsigned long long>(p.K));
    for (const auto& w : p.warnings) std::printf("  warning: %s\n", w.c_str());
  });
  section("decaying-step plan", [&] {
    if (!(a.gamma > 0.0 && a.gamma <= 1.0)) throw std::domain_error("needs gamma in (0, 1]");
    const std::uint64_t K = spp::iteration_complexity(a.eps, a.gamma, c);
    std::printf("decaying-step plan: K = %llu\n", static_cast<unsigned long long>(K));
  });
  section("restart plan", [&] {
    const spp::RsppPlan p = spp::rspp_plan(a.eps, a.gamma, c);
    std::printf("restart plan: T = %llu epochs, total iterations >= %s\n",
                static_cast<unsigned long long>(p.epochs),
                spp::format_number(p.total_iterations_lower_bound).c_str());
  });
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic proximal point experiments and convergence plans"};
  app.require_subcommand(1);

  std::string run_config, run_output;
  std::size_t run_workers = 0;
  auto* run = app.add_subcommand("run", "Run the Monte-Carlo experiment described by a config file");
  run->add_option("config", run_config, "Config file")->required();
  run->add_option("-j,--workers", run_workers, "Worker threads (default: config, then hardware)");
  run->add_option("-o,--output", run_output, "Output directory (the environment variable wins)");

  std::string family, gen_output;
  auto* gen = app.add_subcommand("gen-config", "Print a documented config template");
  gen->add_option("family", family,
                  "constrained-ls, random-ls-polyhedron, markowitz, feasibility or finite-sum")
      ->required();
  gen->add_option("-o,--output", gen_output, "Write to a file instead of stdout");

  std::string kappa_config;
  std::size_t kappa_probes = 200;
  std::uint64_t kappa_seed = 1;
  auto* kappa = app.add_subcommand("estimate-kappa", "Estimate the linear-regularity constant");
  kappa->add_option("config", kappa_config, "Config file")->required();
  kappa->add_option("--probes", kappa_probes, "Number of probe points")->capture_default_str();
  kappa->add_option("--seed", kappa_seed, "Probe seed")->capture_default_str();

  PlanArgs pa;
  auto* plan = app.add_subcommand("plan", "Print stepsize and iteration plans for a target accuracy");
  plan->add_option("--eps", pa.eps, "Target accuracy epsilon")->required()->check(CLI::PositiveNumber);
  plan->add_option("--config", pa.config, "Measure constants on the configured problem");
  plan->add_option("--mu0", pa.mu0, "Initial stepsize")->capture_default_str();
  plan->add_option("--gamma", pa.gamma, "Stepsize exponent")->capture_default_str();
  plan->add_option("--probes", pa.probes, "Probes for the regularity estimate")->capture_default_str();
  plan->add_option("--r0", pa.r0, "||x0 - x*||");
  plan->add_option("--kappa", pa.kappa, "Linear-regularity constant");
  plan->add_option("--lipschitz-sq", pa.lipschitz_sq, "E[L^2]");
  plan->add_option("--eta-sq", pa.eta_sq, "E[||grad f(x*;S)||^2]");
  plan->add_option("--dist0", pa.dist0, "dist_X(x0)");
  plan->add_option("--grad-norm", pa.grad_norm, "||grad F(x*)||");
  plan->add_option("--sigma", pa.sigma, "Strong convexity shared by every component");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(run_config, run_workers, run_output);
    if (*gen) return cmd_gen_config(family, gen_output);
    if (*kappa) return cmd_estimate_kappa(kappa_config, kappa_probes, kappa_seed);
    if (*plan) return cmd_plan(pa);
  } catch (const spp::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const spp::CsvError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntimeError;
  }
  return kOk;
}
