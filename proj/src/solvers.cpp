#include "spp/solvers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace spp {

const char* to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::SPP: return "SPP";
    case Algorithm::ASPP: return "A-SPP";
    case Algorithm::SGD: return "SGD";
    case Algorithm::RSPP: return "RSPP";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  std::string key;
  for (char ch : name) {
    if (ch != '-' && ch != '_') key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  if (key == "spp") return Algorithm::SPP;
  if (key == "aspp") return Algorithm::ASPP;
  if (key == "sgd") return Algorithm::SGD;
  if (key == "rspp") return Algorithm::RSPP;
  throw std::invalid_argument("unknown algorithm '" + name + "' (expected SPP, A-SPP, SGD or RSPP)");
}

Metrics evaluate(const StochasticProblem& problem, const Vector& x, double feasibility_tol) {
  Metrics m;
  if (problem.optimum()) m.sqdist = (x - *problem.optimum()).squaredNorm();
  if (problem.max_violation(x) > feasibility_tol) {
    const double d = problem.feasibility_distance(x);
    m.feasibility = d * d;
  }
  m.objective = problem.objective(x);
  if (problem.has_test_objective()) m.test_objective = problem.test_objective(x);
  return m;
}

namespace {

constexpr double kDivergenceNorm = 1e12;

void validate(const StochasticProblem& problem, const SolverConfig& config, Algorithm expected) {
  if (config.algorithm != expected) {
    throw std::invalid_argument(std::string("solver called with algorithm ") +
                                to_string(config.algorithm) + ", expected " + to_string(expected));
  }
  if (config.stride < 1) throw std::invalid_argument("SolverConfig: stride must be >= 1");
  if (expected == Algorithm::RSPP) {
    if (config.epochs < 1) throw std::invalid_argument("SolverConfig: epochs must be >= 1");
    if (config.schedule.kind() != ScheduleKind::PolyDecay) {
      throw std::invalid_argument("RSPP needs a poly-decay schedule (gamma > 0)");
    }
  } else if (config.iterations < 1) {
    throw std::invalid_argument("SolverConfig: iterations must be >= 1");
  }
  if (config.x0) require_dimension(*config.x0, problem.dimension(), "SolverConfig::x0");
}

Vector starting_point(const StochasticProblem& problem, const SolverConfig& config) {
  Vector x = config.x0 ? *config.x0 : problem.initial_point();
  if (!x.allFinite()) throw std::invalid_argument("SolverConfig: starting point is not finite");
  return x;
}

void record(RunTrace& trace, const StochasticProblem& problem, const SolverConfig& config,
            std::uint64_t k, double stepsize, const Vector& reported) {
  TraceRecord r;
  r.k = k;
  r.stepsize = stepsize;
  r.metrics = evaluate(problem, reported, config.feasibility_tol);
  if (config.keep_iterates) r.iterate = reported;
  trace.records.push_back(std::move(r));
}

// One inner update; returns the draw used.
ProblemDraw step(const StochasticProblem& problem, bool gradient_step, double mu, Vector& x,
                 RandomSource& rng) {
  const ProblemDraw draw = problem.draw(rng);
  const LossComponent& loss = problem.loss(draw.loss_index);
  Vector y = gradient_step ? Vector(x - mu * loss.gradient(x)) : loss.prox(x, mu);
  x = problem.set(draw.set_index).project(y);
  return draw;
}

RunTrace run_linear(const StochasticProblem& problem, const SolverConfig& config, RandomSource& rng,
                    Algorithm algorithm) {
  validate(problem, config, algorithm);
  const bool averaged = algorithm == Algorithm::ASPP;
  const bool gradient_step = algorithm == Algorithm::SGD;

  RunTrace trace;
  trace.algorithm = algorithm;
  trace.records.reserve(config.iterations / config.stride + 1);
  Vector x = starting_point(problem, config);
  Vector weighted_sum = Vector::Zero(x.size());
  double weight_total = 0.0;

  record(trace, problem, config, 0, config.schedule.at(0), x);
  for (std::uint64_t k = 0; k < config.iterations; ++k) {
    const double mu = config.schedule.at(k);
    if (averaged) {
      weighted_sum += mu * x;
      weight_total += mu;
    }
    const ProblemDraw draw = step(problem, gradient_step, mu, x, rng);
    if (!x.allFinite() || (gradient_step && x.norm() > kDivergenceNorm)) {
      if (gradient_step) {
        trace.diverged = true;
        trace.diverged_at = k + 1;
        trace.iterations_run = k + 1;
        trace.final_iterate = x;
        return trace;
      }
      throw NumericalError(std::string(to_string(algorithm)) +
                           ": non-finite iterate at iteration " + std::to_string(k + 1));
    }
    if (config.observer) config.observer(IterationEvent{k, draw, mu, x});
    const std::uint64_t next = k + 1;
    if (next % config.stride == 0) {
      const double mu_next = config.schedule.at(next);
      if (averaged) {
        record(trace, problem, config, next, mu_next, weighted_sum / weight_total);
      } else {
        record(trace, problem, config, next, mu_next, x);
      }
    }
  }
  trace.iterations_run = config.iterations;
  trace.final_iterate = x;
  if (averaged) trace.final_average = weighted_sum / weight_total;
  return trace;
}

}  // namespace

RunTrace run_spp(const StochasticProblem& problem, const SolverConfig& config, RandomSource& rng) {
  return run_linear(problem, config, rng, Algorithm::SPP);
}

RunTrace run_aspp(const StochasticProblem& problem, const SolverConfig& config, RandomSource& rng) {
  return run_linear(problem, config, rng, Algorithm::ASPP);
}

RunTrace run_sgd(const StochasticProblem& problem, const SolverConfig& config, RandomSource& rng) {
  return run_linear(problem, config, rng, Algorithm::SGD);
}

std::uint64_t rspp_epoch_length(std::uint64_t t, double gamma) {
  if (t < 1) throw std::invalid_argument("rspp_epoch_length: epochs are numbered from 1");
  return std::max<std::uint64_t>(1, robust_ceil(std::pow(static_cast<double>(t), gamma)));
}

double rspp_epoch_stepsize(std::uint64_t t, double mu0, double gamma) {
  if (t < 1) throw std::invalid_argument("rspp_epoch_stepsize: epochs are numbered from 1");
  return mu0 / std::pow(static_cast<double>(t), gamma);
}

std::uint64_t rspp_epochs_for_budget(std::uint64_t budget, double gamma) {
  std::uint64_t total = 0;
  std::uint64_t t = 0;
  while (true) {
    const std::uint64_t next = total + rspp_epoch_length(t + 1, gamma);
    if (next > budget) break;
    total = next;
    ++t;
  }
  return std::max<std::uint64_t>(t, 1);
}

RunTrace run_rspp(const StochasticProblem& problem, const SolverConfig& config, RandomSource& rng) {
  validate(problem, config, Algorithm::RSPP);
  const double mu0 = config.schedule.mu0();
  const double gamma = config.schedule.gamma();

  RunTrace trace;
  trace.algorithm = Algorithm::RSPP;
  Vector x = starting_point(problem, config);
  Vector output = x;
  std::uint64_t k = 0;
  record(trace, problem, config, 0, rspp_epoch_stepsize(1, mu0, gamma), output);

  for (std::uint64_t t = 1; t <= config.epochs; ++t) {
    const double mu = rspp_epoch_stepsize(t, mu0, gamma);
    const std::uint64_t length = rspp_epoch_length(t, gamma);
    Vector sum = Vector::Zero(x.size());
    for (std::uint64_t j = 0; j < length; ++j) {
      sum += x;
      const ProblemDraw draw = step(problem, false, mu, x, rng);
      if (!x.allFinite()) {
        throw NumericalError("RSPP: non-finite iterate at iteration " + std::to_string(k + 1) +
                             " (epoch " + std::to_string(t) + ")");
      }
      if (config.observer) config.observer(IterationEvent{k, draw, mu, x});
      ++k;
      if (j + 1 == length) {
        output = sum / static_cast<double>(length);
        x = output;
        Epoch epoch;
        epoch.index = t;
        epoch.stepsize = mu;
        epoch.length = length;
        epoch.end_iteration = k;
        epoch.output = output;
        trace.epochs.push_back(std::move(epoch));
      }
      if (k % config.stride == 0) {
        const double mu_now = j + 1 == length ? rspp_epoch_stepsize(t + 1, mu0, gamma) : mu;
        record(trace, problem, config, k, mu_now, output);
      }
    }
  }
  trace.iterations_run = k;
  trace.final_iterate = x;
  trace.final_average = output;
  return trace;
}

RunTrace run_solver(const StochasticProblem& problem, const SolverConfig& config) {
  RandomSource rng(config.seed);
  switch (config.algorithm) {
    case Algorithm::SPP: return run_spp(problem, config, rng);
    case Algorithm::ASPP: return run_aspp(problem, config, rng);
    case Algorithm::SGD: return run_sgd(problem, config, rng);
    case Algorithm::RSPP: return run_rspp(problem, config, rng);
  }
  throw std::invalid_argument("run_solver: unknown algorithm");
}

}  // namespace spp
