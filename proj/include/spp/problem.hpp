// The stochastic problem model: a finite sampler over (loss, constraint)
// pairs, with optional known optimum and user-supplied constants.
#pragma once

#include "spp/components.hpp"
#include "spp/constraints.hpp"
#include "spp/core.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace spp {

/// How a draw S picks its constraint set.
enum class Coupling {
  /// Loss index from the loss distribution, set index uniform, independently.
  Independent,
  /// One index i drives both: loss i and set i (requires equal counts).
  Paired,
};

const char* to_string(Coupling coupling);

struct ProblemData {
  std::string family = "custom";
  std::size_t n = 0;
  std::vector<LossComponent> losses;
  /// Empty means the whole space.
  std::vector<ConstraintSet> sets;
  Coupling coupling = Coupling::Independent;
  /// Loss sampling weights; empty means uniform.
  std::vector<double> loss_weights;

  /// Minimizer of the objective over the intersection, when known.
  std::optional<Vector> optimum;
  /// Planted parameter of a synthetic generator (not necessarily optimal).
  std::optional<Vector> ground_truth;
  /// A point of the intersection used to anchor projections and probes.
  std::optional<Vector> feasible_point;
  /// Default starting point; zero when absent.
  std::optional<Vector> initial_point;

  std::optional<double> kappa;
  std::optional<double> mean_sq_lipschitz;

  /// Held-out objective, e.g. a test-split loss.
  std::function<double(const Vector&)> test_objective;
};

struct ProblemDraw {
  std::size_t loss_index = 0;
  std::size_t set_index = 0;
};

/// Immutable after construction; copies share state and are thread-safe.
class StochasticProblem {
 public:
  StochasticProblem() = default;
  explicit StochasticProblem(ProblemData data);

  const std::string& family() const { return d_->family; }
  std::size_t dimension() const { return d_->n; }
  std::size_t loss_count() const { return d_->losses.size(); }
  std::size_t set_count() const { return d_->sets.size(); }
  const LossComponent& loss(std::size_t i) const { return d_->losses.at(i); }
  const ConstraintSet& set(std::size_t j) const { return d_->sets.at(j); }
  const std::vector<LossComponent>& losses() const { return d_->losses; }
  const std::vector<ConstraintSet>& sets() const { return d_->sets; }
  Coupling coupling() const { return d_->coupling; }

  double loss_probability(std::size_t i) const;
  double set_probability(std::size_t j) const;

  ProblemDraw draw(RandomSource& rng) const;

  /// F(x) = E[f(x;S)], exact over the finite distribution.
  double objective(const Vector& x) const;
  Vector objective_gradient(const Vector& x) const;
  bool has_test_objective() const { return static_cast<bool>(d_->test_objective); }
  double test_objective(const Vector& x) const;

  /// Exact distance to the intersection of all sets.
  double feasibility_distance(const Vector& x) const;
  Vector project_feasible(const Vector& x) const;
  /// Largest constraint violation (0 when feasible).
  double max_violation(const Vector& x) const;
  /// E[dist^2_{X_S}(x)] under the set distribution.
  double mean_set_sq_distance(const Vector& x) const;

  /// E[sigma_{f,S}].
  double mean_strong_convexity() const;
  /// E[L_{f,S}^2] from the smoothness constants (infinite if any is).
  double mean_sq_smoothness() const;
  /// E[||grad f(x;S)||^2].
  double mean_sq_gradient_norm(const Vector& x) const;

  const std::optional<Vector>& optimum() const { return d_->optimum; }
  const std::optional<Vector>& ground_truth() const { return d_->ground_truth; }
  const Vector& feasible_point() const { return d_->feasible_point_value; }
  Vector initial_point() const;
  const std::optional<double>& kappa_override() const { return d_->kappa; }
  const std::optional<double>& mean_sq_lipschitz_override() const { return d_->mean_sq_lipschitz; }

  /// Returns a copy with a different optimum (validated like the constructor).
  StochasticProblem with_optimum(Vector optimum) const;
  ProblemData data() const;

 private:
  struct State : ProblemData {
    Vector feasible_point_value;
    CategoricalSampler loss_sampler;
    PolyhedralProjector projector;
  };
  std::shared_ptr<const State> d_;
};

struct KappaOptions {
  /// Probe sphere center; the problem's feasible point when absent.
  std::optional<Vector> center;
  /// Probe sphere radius; 2 max(1, ||x0||) when absent.
  std::optional<double> radius;
};

struct KappaEstimate {
  /// Lower estimate of the linear-regularity constant.
  double kappa = 1.0;
  std::size_t used = 0;
  std::size_t skipped = 0;
};

/// max over probes of dist_X(x)^2 / E[dist_{X_S}(x)^2], with probes uniform on
/// a sphere. Probes whose denominator is below 1e-14 are skipped.
KappaEstimate estimate_kappa(const StochasticProblem& problem, std::size_t probes,
                             RandomSource& rng, const KappaOptions& options = {});

/// Probability-weighted inputs for constants that depend on the set draw.
std::vector<double> set_distribution(const StochasticProblem& problem);

}  // namespace spp
