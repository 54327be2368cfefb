// SPP, averaged SPP, projected SGD and restarted SPP with per-iteration traces.
#pragma once

#include "spp/problem.hpp"
#include "spp/schedules.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace spp {

enum class Algorithm { SPP, ASPP, SGD, RSPP };

const char* to_string(Algorithm algorithm);
/// Accepts "spp", "a-spp"/"aspp", "sgd", "rspp" (case-insensitive).
Algorithm parse_algorithm(const std::string& name);

/// Passed to SolverConfig::observer after every inner update.
struct IterationEvent {
  std::uint64_t k;  // index of the iterate that was updated (x^k -> x^{k+1})
  ProblemDraw draw;
  double stepsize;
  const Vector& next;
};

struct SolverConfig {
  Algorithm algorithm = Algorithm::SPP;
  StepsizeSchedule schedule = StepsizeSchedule::poly_decay(1.0, 1.0);
  /// Iteration budget K (SPP, A-SPP, SGD).
  std::uint64_t iterations = 1;
  /// Epoch budget T (RSPP).
  std::uint64_t epochs = 1;
  std::uint64_t seed = 0;
  /// Record every stride-th iterate.
  std::uint64_t stride = 1;
  /// Violations at or below this are reported as zero infeasibility.
  double feasibility_tol = 1e-10;
  /// Starting point; the problem's initial point when absent.
  std::optional<Vector> x0;
  /// Keep the reported iterate in every record.
  bool keep_iterates = false;
  std::function<void(const IterationEvent&)> observer;
};

struct Metrics {
  /// ||x - x*||^2, NaN when the optimum is unknown.
  double sqdist = std::numeric_limits<double>::quiet_NaN();
  /// dist_X(x)^2.
  double feasibility = 0.0;
  double objective = 0.0;
  /// Held-out objective, NaN when none is attached.
  double test_objective = std::numeric_limits<double>::quiet_NaN();
};

Metrics evaluate(const StochasticProblem& problem, const Vector& x, double feasibility_tol = 1e-10);

struct TraceRecord {
  std::uint64_t k = 0;
  double stepsize = 0.0;
  Metrics metrics;
  /// Filled when SolverConfig::keep_iterates is set.
  Vector iterate;
};

struct Epoch {
  std::uint64_t index = 0;
  double stepsize = 0.0;
  std::uint64_t length = 0;
  /// Total inner iterations completed at the end of this epoch.
  std::uint64_t end_iteration = 0;
  Vector output;
};

struct RunTrace {
  Algorithm algorithm = Algorithm::SPP;
  std::vector<TraceRecord> records;
  Vector final_iterate;
  /// Weighted average (A-SPP) or last epoch output (RSPP).
  std::optional<Vector> final_average;
  std::vector<Epoch> epochs;
  bool diverged = false;
  std::uint64_t diverged_at = 0;
  std::uint64_t iterations_run = 0;
};

RunTrace run_spp(const StochasticProblem& problem, const SolverConfig& config, RandomSource& rng);
RunTrace run_aspp(const StochasticProblem& problem, const SolverConfig& config, RandomSource& rng);
RunTrace run_sgd(const StochasticProblem& problem, const SolverConfig& config, RandomSource& rng);
RunTrace run_rspp(const StochasticProblem& problem, const SolverConfig& config, RandomSource& rng);

/// Dispatches on config.algorithm with a RandomSource seeded from config.seed.
RunTrace run_solver(const StochasticProblem& problem, const SolverConfig& config);

/// K_t = ceil(t^gamma) and mu_t = mu0 / t^gamma for epochs t = 1..T.
std::uint64_t rspp_epoch_length(std::uint64_t t, double gamma);
double rspp_epoch_stepsize(std::uint64_t t, double mu0, double gamma);
/// Largest T whose total inner iterations fit in `budget` (at least 1).
std::uint64_t rspp_epochs_for_budget(std::uint64_t budget, double gamma);

}  // namespace spp
