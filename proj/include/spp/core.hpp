// Dense vector helpers, the seeded random source and the error types shared
// by every other part of the library.
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when two operands (or an operand and a model) disagree on dimension.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure inside a routine that should not fail for valid input
/// (factorization breakdown, non-finite iterate, stalled inner solver).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative routine hit its iteration cap. Carries the best iterate found.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, Vector best, long iterations)
      : NumericalError(what), best_(std::move(best)), iterations_(iterations) {}
  const Vector& best() const { return best_; }
  long iterations() const { return iterations_; }

 private:
  Vector best_;
  long iterations_;
};

void require_same_dimension(const Vector& a, const Vector& b, const char* where);
void require_dimension(const Vector& a, std::size_t n, const char* where);

double dot(const Vector& a, const Vector& b);
double norm(const Vector& a);
double squared_distance(const Vector& a, const Vector& b);
bool all_finite(const Vector& a);

Vector to_vector(std::span<const double> values);

/// Seeded pseudo-random stream. Two sources built from the same seed emit the
/// same sequence of draws, whatever mix of draw kinds is requested.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  /// Number of draws taken so far.
  std::uint64_t position() const { return position_; }

  /// Uniform over {0, ..., m-1}; m must be positive.
  std::size_t uniform_index(std::size_t m);
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  Vector normal_vector(std::size_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t position_ = 0;
  std::mt19937_64 engine_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

/// Draws indices from a fixed discrete distribution.
class CategoricalSampler {
 public:
  CategoricalSampler() = default;
  /// Weights must be nonnegative with a positive sum; they are normalized.
  explicit CategoricalSampler(std::span<const double> weights);

  std::size_t size() const { return probabilities_.size(); }
  double probability(std::size_t i) const { return probabilities_.at(i); }
  const std::vector<double>& probabilities() const { return probabilities_; }
  std::size_t draw(RandomSource& rng) const;

 private:
  std::vector<double> probabilities_;
  std::vector<double> cumulative_;
};

}  // namespace spp
