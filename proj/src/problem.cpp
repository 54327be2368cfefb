#include "spp/problem.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace spp {

const char* to_string(Coupling coupling) {
  return coupling == Coupling::Paired ? "paired" : "independent";
}

namespace {

constexpr double kOptimumTolerance = 1e-9;

void check_member(const std::vector<ConstraintSet>& sets, const Vector& x, const char* what) {
  for (std::size_t j = 0; j < sets.size(); ++j) {
    const double dist = sets[j].distance(x);
    if (dist > kOptimumTolerance * std::max(1.0, x.norm())) {
      throw std::invalid_argument(std::string("StochasticProblem: ") + what + " violates set " +
                                  std::to_string(j) + " by " + std::to_string(dist));
    }
  }
}

}  // namespace

StochasticProblem::StochasticProblem(ProblemData data) {
  auto state = std::make_shared<State>();
  static_cast<ProblemData&>(*state) = std::move(data);
  State& s = *state;
  if (s.n == 0) throw std::invalid_argument("StochasticProblem: dimension must be positive");
  if (s.losses.empty()) throw std::invalid_argument("StochasticProblem: no loss components");
  for (std::size_t i = 0; i < s.losses.size(); ++i) {
    if (s.losses[i].dimension() != s.n) {
      throw DimensionError("StochasticProblem: loss " + std::to_string(i) + " has dimension " +
                           std::to_string(s.losses[i].dimension()));
    }
  }
  if (s.sets.empty()) s.sets.push_back(ConstraintSet::whole_space(s.n));
  for (std::size_t j = 0; j < s.sets.size(); ++j) {
    if (s.sets[j].dimension() != s.n) {
      throw DimensionError("StochasticProblem: set " + std::to_string(j) + " has dimension " +
                           std::to_string(s.sets[j].dimension()));
    }
  }
  if (s.coupling == Coupling::Paired && s.sets.size() != s.losses.size()) {
    throw std::invalid_argument("StochasticProblem: paired coupling needs equal loss and set counts");
  }
  if (!s.loss_weights.empty()) {
    if (s.loss_weights.size() != s.losses.size()) {
      throw std::invalid_argument("StochasticProblem: one weight per loss required");
    }
    s.loss_sampler = CategoricalSampler(s.loss_weights);
  }
  for (auto* v : {&s.optimum, &s.ground_truth, &s.feasible_point, &s.initial_point}) {
    if (*v) {
      require_dimension(**v, s.n, "StochasticProblem");
      if (!(*v)->allFinite()) throw std::invalid_argument("StochasticProblem: non-finite vector");
    }
  }
  if (s.kappa && !(*s.kappa >= 1.0)) throw std::invalid_argument("StochasticProblem: kappa < 1");
  if (s.mean_sq_lipschitz && !(*s.mean_sq_lipschitz >= 0.0)) {
    throw std::invalid_argument("StochasticProblem: E[L^2] must be nonnegative");
  }
  if (s.optimum) check_member(s.sets, *s.optimum, "optimum");
  if (s.feasible_point) check_member(s.sets, *s.feasible_point, "feasible point");

  std::optional<Vector> anchor = s.feasible_point ? s.feasible_point : s.optimum;
  s.projector = PolyhedralProjector(s.sets, s.n, anchor);
  s.feasible_point_value = s.projector.feasible_point();
  d_ = std::move(state);
}

double StochasticProblem::loss_probability(std::size_t i) const {
  if (i >= loss_count()) throw std::out_of_range("loss_probability: index out of range");
  if (d_->loss_weights.empty()) return 1.0 / static_cast<double>(loss_count());
  return d_->loss_sampler.probability(i);
}

double StochasticProblem::set_probability(std::size_t j) const {
  if (j >= set_count()) throw std::out_of_range("set_probability: index out of range");
  if (d_->coupling == Coupling::Paired) return loss_probability(j);
  return 1.0 / static_cast<double>(set_count());
}

std::vector<double> set_distribution(const StochasticProblem& problem) {
  std::vector<double> p(problem.set_count());
  for (std::size_t j = 0; j < p.size(); ++j) p[j] = problem.set_probability(j);
  return p;
}

ProblemDraw StochasticProblem::draw(RandomSource& rng) const {
  ProblemDraw out;
  out.loss_index = d_->loss_weights.empty() ? rng.uniform_index(loss_count())
                                            : d_->loss_sampler.draw(rng);
  if (d_->coupling == Coupling::Paired) {
    out.set_index = out.loss_index;
  } else {
    out.set_index = set_count() == 1 ? 0 : rng.uniform_index(set_count());
  }
  return out;
}

double StochasticProblem::objective(const Vector& x) const {
  require_dimension(x, d_->n, "StochasticProblem::objective");
  double total = 0.0;
  for (std::size_t i = 0; i < loss_count(); ++i) total += loss_probability(i) * d_->losses[i].value(x);
  return total;
}

Vector StochasticProblem::objective_gradient(const Vector& x) const {
  require_dimension(x, d_->n, "StochasticProblem::objective_gradient");
  Vector g = Vector::Zero(x.size());
  for (std::size_t i = 0; i < loss_count(); ++i) g += loss_probability(i) * d_->losses[i].gradient(x);
  return g;
}

double StochasticProblem::test_objective(const Vector& x) const {
  if (!d_->test_objective) throw std::logic_error("StochasticProblem: no test objective attached");
  return d_->test_objective(x);
}

double StochasticProblem::feasibility_distance(const Vector& x) const {
  return d_->projector.distance(x);
}

Vector StochasticProblem::project_feasible(const Vector& x) const {
  return d_->projector.project(x);
}

double StochasticProblem::max_violation(const Vector& x) const {
  return d_->projector.system().max_violation(x);
}

double StochasticProblem::mean_set_sq_distance(const Vector& x) const {
  double total = 0.0;
  for (std::size_t j = 0; j < set_count(); ++j) {
    total += set_probability(j) * d_->sets[j].squared_distance(x);
  }
  return total;
}

double StochasticProblem::mean_strong_convexity() const {
  double total = 0.0;
  for (std::size_t i = 0; i < loss_count(); ++i) {
    total += loss_probability(i) * d_->losses[i].strong_convexity();
  }
  return total;
}

double StochasticProblem::mean_sq_smoothness() const {
  double total = 0.0;
  for (std::size_t i = 0; i < loss_count(); ++i) {
    const double L = d_->losses[i].smoothness();
    total += loss_probability(i) * L * L;
  }
  return total;
}

double StochasticProblem::mean_sq_gradient_norm(const Vector& x) const {
  double total = 0.0;
  for (std::size_t i = 0; i < loss_count(); ++i) {
    total += loss_probability(i) * d_->losses[i].gradient(x).squaredNorm();
  }
  return total;
}

Vector StochasticProblem::initial_point() const {
  if (d_->initial_point) return *d_->initial_point;
  return Vector::Zero(static_cast<Eigen::Index>(d_->n));
}

ProblemData StochasticProblem::data() const { return static_cast<const ProblemData&>(*d_); }

StochasticProblem StochasticProblem::with_optimum(Vector optimum) const {
  ProblemData copy = data();
  copy.optimum = std::move(optimum);
  if (!copy.feasible_point) copy.feasible_point = d_->feasible_point_value;
  return StochasticProblem(std::move(copy));
}

KappaEstimate estimate_kappa(const StochasticProblem& problem, std::size_t probes,
                             RandomSource& rng, const KappaOptions& options) {
  if (probes < 1) throw std::invalid_argument("estimate_kappa: need at least one probe");
  const Vector center = options.center ? *options.center : problem.feasible_point();
  require_dimension(center, problem.dimension(), "estimate_kappa");
  const double radius =
      options.radius ? *options.radius : 2.0 * std::max(1.0, problem.initial_point().norm());
  if (!(radius > 0.0)) throw std::invalid_argument("estimate_kappa: radius must be positive");

  KappaEstimate out;
  double best = 0.0;
  for (std::size_t p = 0; p < probes; ++p) {
    Vector dir = rng.normal_vector(problem.dimension());
    const double len = dir.norm();
    if (!(len > 0.0)) {
      ++out.skipped;
      continue;
    }
    const Vector x = center + (radius / len) * dir;
    const double denom = problem.mean_set_sq_distance(x);
    if (denom < 1e-14) {
      ++out.skipped;
      continue;
    }
    const double d = problem.feasibility_distance(x);
    best = std::max(best, d * d / denom);
    ++out.used;
  }
  if (out.used == 0) {
    throw std::runtime_error("estimate_kappa: all " + std::to_string(probes) +
                             " probes were degenerate (inside every set)");
  }
  out.kappa = std::max(1.0, best);
  return out;
}

}  // namespace spp
