#include "spp/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace spp {

void require_same_dimension(const Vector& a, const Vector& b, const char* where) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(where) + ": dimension mismatch (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
  }
}

void require_dimension(const Vector& a, std::size_t n, const char* where) {
  if (static_cast<std::size_t>(a.size()) != n) {
    throw DimensionError(std::string(where) + ": expected dimension " + std::to_string(n) +
                         ", got " + std::to_string(a.size()));
  }
}

double dot(const Vector& a, const Vector& b) {
  require_same_dimension(a, b, "dot");
  return a.dot(b);
}

double norm(const Vector& a) { return a.norm(); }

double squared_distance(const Vector& a, const Vector& b) {
  require_same_dimension(a, b, "squared_distance");
  return (a - b).squaredNorm();
}

bool all_finite(const Vector& a) { return a.allFinite(); }

Vector to_vector(std::span<const double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  std::copy(values.begin(), values.end(), v.data());
  return v;
}

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::size_t RandomSource::uniform_index(std::size_t m) {
  if (m == 0) throw std::invalid_argument("uniform_index: empty range");
  ++position_;
  std::uniform_int_distribution<std::size_t> dist(0, m - 1);
  return dist(engine_);
}

double RandomSource::uniform() {
  ++position_;
  return std::generate_canonical<double, 53>(engine_);
}

double RandomSource::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RandomSource::normal() {
  ++position_;
  return gauss_(engine_);
}

Vector RandomSource::normal_vector(std::size_t n) {
  Vector v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = normal();
  return v;
}

CategoricalSampler::CategoricalSampler(std::span<const double> weights) {
  if (weights.empty()) throw std::invalid_argument("CategoricalSampler: no weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("CategoricalSampler: weights must be finite and nonnegative");
    }
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("CategoricalSampler: weights sum to zero");
  probabilities_.reserve(weights.size());
  cumulative_.reserve(weights.size());
  double running = 0.0;
  for (double w : weights) {
    probabilities_.push_back(w / total);
    running += w / total;
    cumulative_.push_back(running);
  }
  cumulative_.back() = 1.0;
}

std::size_t CategoricalSampler::draw(RandomSource& rng) const {
  const double u = rng.uniform();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return static_cast<std::size_t>(it - cumulative_.begin());
}

}  // namespace spp
