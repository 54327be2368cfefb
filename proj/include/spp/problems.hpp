// Problem generators (constrained least squares, random polyhedral least
// squares, least-norm feasibility, finite sums) and Markowitz portfolios built
// from returns tables.
#pragma once

#include "spp/problem.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spp {

enum class Family { ConstrainedLs, RandomLsPolyhedron, Markowitz, Feasibility, FiniteSum };

const char* to_string(Family family);
Family parse_family(const std::string& name);

struct GeneratorSpec {
  Family family = Family::ConstrainedLs;
  std::size_t n = 20;
  std::size_t m = 2000;
  /// Rows per batch component; 0 means n for constrained-ls and 1 otherwise.
  std::size_t batch = 0;
  /// Number of halfspaces; absent means one per loss component.
  std::optional<std::size_t> constraints;
  std::uint64_t seed = 1;
  /// Standard deviation of the observation noise.
  double noise = 1.0;
  /// Constraints active at the planted solution (constrained-ls).
  std::size_t active = 3;
  /// Scale of the random slacks of inactive constraints.
  double slack = 1.0;
  /// Quadratic weight for the feasibility and finite-sum families.
  double lambda = 1.0;
  Coupling coupling = Coupling::Independent;
};

/// A generated problem plus the raw data it was built from.
struct GeneratedProblem {
  StochasticProblem problem;
  /// Feature covariance H (constrained-ls), empty otherwise.
  Matrix covariance;
  /// Observation matrix and targets, one row per observation.
  Matrix design;
  Vector targets;
  /// Constraint rows C x <= d.
  Matrix C;
  Vector d;
  std::size_t batch_count = 0;
  std::size_t residual_count = 0;
};

GeneratedProblem gen_constrained_ls(const GeneratorSpec& spec, RandomSource& rng);
GeneratedProblem gen_random_ls_polyhedron(const GeneratorSpec& spec, RandomSource& rng);
GeneratedProblem gen_feasibility(const GeneratorSpec& spec, RandomSource& rng);
GeneratedProblem gen_finite_sum(const GeneratorSpec& spec, RandomSource& rng);

/// Dispatches on spec.family with a source seeded from spec.seed. The
/// Markowitz family uses synthetic returns of size m x n.
GeneratedProblem generate(const GeneratorSpec& spec);

/// Haar-distributed orthogonal matrix.
Matrix random_orthogonal(std::size_t n, RandomSource& rng);

/// Minimizes the exact objective of a quadratic problem over the polyhedral
/// intersection of its sets, starting from the feasible `start`.
Vector solve_reference_optimum(const ProblemData& data, const Vector& start);

struct ReturnsTable {
  std::vector<std::string> assets;
  /// T x n per-period returns.
  Matrix returns;
  /// Column means.
  Vector mean;

  std::size_t periods() const { return static_cast<std::size_t>(returns.rows()); }
  std::size_t assets_count() const { return static_cast<std::size_t>(returns.cols()); }
};

/// Raised for malformed CSV input; carries the 1-based line number.
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& what, std::size_t line) : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Comma-separated, header row first. A leading non-numeric column (dates)
/// is dropped.
ReturnsTable load_returns_csv(const std::string& path);
ReturnsTable parse_returns_csv(const std::string& text);
void write_returns_csv(const ReturnsTable& table, const std::string& path);
ReturnsTable make_returns_table(std::vector<std::string> assets, Matrix returns);

/// One-factor synthetic daily returns.
ReturnsTable synthetic_returns(std::size_t periods, std::size_t assets, std::uint64_t seed);

struct MarkowitzOptions {
  /// Target return b; the mean of the per-asset training means when absent.
  std::optional<double> target;
  double train_fraction = 0.9;
  std::uint64_t seed = 1;
};

struct MarkowitzInstance {
  StochasticProblem problem;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  /// Per-asset mean return on the training rows.
  Vector average_returns;
  double target = 0.0;
};

MarkowitzInstance build_markowitz(const ReturnsTable& table, const MarkowitzOptions& options = {});

}  // namespace spp
