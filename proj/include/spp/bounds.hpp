// Closed-form convergence guarantees: convex-case bounds, constant-step plans
// and envelopes, decaying-step strongly convex bounds and restart plans.
#pragma once

#include "spp/problem.hpp"
#include "spp/schedules.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spp {

/// Raised when an evaluator needs a constant that was not supplied.
class MissingConstantsError : public std::invalid_argument {
 public:
  MissingConstantsError(const std::string& where, std::vector<std::string> missing);
  const std::vector<std::string>& missing() const { return missing_; }

 private:
  std::vector<std::string> missing_;
};

struct ProblemConstants {
  /// ||x0 - x*||
  std::optional<double> r0;
  std::optional<double> kappa;
  /// E[L_{f,S}^2]
  std::optional<double> mean_sq_lipschitz;
  /// eta^2 = E[||grad f(x*;S)||^2]
  std::optional<double> eta_sq;
  /// dist_X(x0)
  std::optional<double> dist_x0;
  /// ||grad F(x*)||
  std::optional<double> grad_F_norm;
  std::optional<double> mu0;
  std::optional<double> gamma;
  /// Per-component sigma_{f,S} and probabilities (uniform when weights empty).
  std::vector<double> sigmas;
  std::vector<double> weights;
  /// Overrides E[theta_S(mu0)^2] computed from sigmas.
  std::optional<double> theta0;
};

/// Measures every constant available from a problem with a known optimum.
/// `kappa` is used as given (an estimate or override).
ProblemConstants measure_constants(const StochasticProblem& problem, const Vector& x0,
                                   double kappa, double mu0, double gamma);

/// E[theta_S(mu)^2] from the sigmas in `c`.
double mean_theta_sq(const ProblemConstants& c, double mu);
/// theta0 override, or E[theta_S(mu0)^2].
double theta0_of(const ProblemConstants& c);

/// A = max{r0, mu0 eta / (1 - sqrt(theta0))}.
double constant_A(const ProblemConstants& c);
/// B = sqrt(2 eta^2) + A sqrt(2 E[L^2]).
double constant_B(const ProblemConstants& c);
/// D (decaying-step bound) when `kappa_power` is 1, D_r (restart plan) when 2.
double constant_D(const ProblemConstants& c, double gamma, int kappa_power = 1);

struct ConvexBounds {
  double suboptimality_upper;
  double suboptimality_lower;
  double feasibility_sq_upper;
};

/// Bounds on E[F(xhat^k)] - F* and E[dist_X^2(xhat^k)] for the weighted
/// average after k >= 1 iterations (sums over mu_0..mu_{k-1}).
ConvexBounds convex_bounds(const ProblemConstants& c, std::uint64_t k,
                           const StepsizeSchedule& schedule);

struct ConstantStepPlan {
  double mu;
  std::uint64_t K;
  std::vector<std::string> warnings;
};

ConstantStepPlan constant_step_plan(double epsilon, const ProblemConstants& c);

struct ConstantStepEnvelope {
  double value;
  /// mu eta / (1 - sqrt(theta_bar)).
  double radius;
  double theta_bar;
};

/// 2 theta_bar^k r0^2 + 2 mu^2 eta^2 / (1 - sqrt(theta_bar))^2.
ConstantStepEnvelope constant_step_envelope(const ProblemConstants& c, double mu, std::uint64_t k);

/// max{r0, mu0 eta / (1 - sqrt(theta0))}: cap on sqrt(E||x^k - x*||^2) for
/// nonincreasing stepsizes.
double boundedness_cap(const ProblemConstants& c);

/// Bound on E||x^k - x*||^2 for mu_k = mu0 / k^gamma, gamma in (0, 1].
double strongly_convex_bound(const ProblemConstants& c, std::uint64_t k, double gamma);

/// Smallest k with strongly_convex_bound(k) <= epsilon.
std::uint64_t iteration_complexity(double epsilon, double gamma, const ProblemConstants& c);

struct RsppPlan {
  std::uint64_t epochs;
  /// T^{1+gamma} / (1 + gamma).
  double total_iterations_lower_bound;
};

RsppPlan rspp_plan(double epsilon, double gamma, const ProblemConstants& c);

}  // namespace spp
