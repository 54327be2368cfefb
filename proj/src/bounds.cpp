#include "spp/bounds.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace spp {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ", ";
    out += items[i];
  }
  return out;
}

class Requirements {
 public:
  explicit Requirements(const char* where) : where_(where) {}

  Requirements& need(const std::optional<double>& value, const char* name) {
    if (!value) missing_.emplace_back(name);
    return *this;
  }
  Requirements& need_sigmas(const ProblemConstants& c) {
    if (!c.theta0 && c.sigmas.empty()) missing_.emplace_back("sigmas");
    return *this;
  }
  void check() const {
    if (!missing_.empty()) throw MissingConstantsError(where_, missing_);
  }

 private:
  const char* where_;
  std::vector<std::string> missing_;
};

double weight_of(const ProblemConstants& c, std::size_t i) {
  if (c.weights.empty()) return 1.0 / static_cast<double>(c.sigmas.size());
  return c.weights[i];
}

void check_weights(const ProblemConstants& c) {
  if (!c.weights.empty() && c.weights.size() != c.sigmas.size()) {
    throw std::invalid_argument("ProblemConstants: weights and sigmas differ in length");
  }
}

// ln(kappa / (kappa - 1)), +inf at kappa = 1.
double log_regularity(double kappa) {
  if (kappa < 1.0) throw std::invalid_argument("kappa must be >= 1");
  if (kappa == 1.0) return std::numeric_limits<double>::infinity();
  return -std::log1p(-1.0 / kappa);
}

double power(double base, double exponent) {
  if (exponent == 0.0) return 1.0;
  if (base == 0.0) return 0.0;
  return std::exp(exponent * std::log(base));
}

void require_unit_interval(double theta0, const char* where) {
  if (!(theta0 > 0.0 && theta0 < 1.0)) {
    throw std::domain_error(std::string(where) + ": theta0 must lie in (0, 1), got " +
                            std::to_string(theta0));
  }
}

}  // namespace

MissingConstantsError::MissingConstantsError(const std::string& where,
                                             std::vector<std::string> missing)
    : std::invalid_argument(where + ": missing constants: " + join(missing)),
      missing_(std::move(missing)) {}

ProblemConstants measure_constants(const StochasticProblem& problem, const Vector& x0,
                                   double kappa, double mu0, double gamma) {
  if (!problem.optimum()) {
    throw std::invalid_argument("measure_constants: the problem has no known optimum");
  }
  const Vector& xs = *problem.optimum();
  ProblemConstants c;
  c.r0 = (x0 - xs).norm();
  c.kappa = kappa;
  c.mean_sq_lipschitz = problem.mean_sq_lipschitz_override()
                            ? *problem.mean_sq_lipschitz_override()
                            : problem.mean_sq_smoothness();
  c.eta_sq = problem.mean_sq_gradient_norm(xs);
  c.dist_x0 = problem.feasibility_distance(x0);
  c.grad_F_norm = problem.objective_gradient(xs).norm();
  c.mu0 = mu0;
  c.gamma = gamma;
  c.sigmas.reserve(problem.loss_count());
  c.weights.reserve(problem.loss_count());
  for (std::size_t i = 0; i < problem.loss_count(); ++i) {
    c.sigmas.push_back(problem.loss(i).strong_convexity());
    c.weights.push_back(problem.loss_probability(i));
  }
  return c;
}

double mean_theta_sq(const ProblemConstants& c, double mu) {
  if (c.sigmas.empty()) throw MissingConstantsError("mean_theta_sq", {"sigmas"});
  check_weights(c);
  double total = 0.0;
  for (std::size_t i = 0; i < c.sigmas.size(); ++i) {
    const double t = theta(mu, c.sigmas[i]);
    total += weight_of(c, i) * t * t;
  }
  return total;
}

double theta0_of(const ProblemConstants& c) {
  if (c.theta0) return *c.theta0;
  Requirements("theta0").need(c.mu0, "mu0").need_sigmas(c).check();
  return mean_theta_sq(c, *c.mu0);
}

double constant_A(const ProblemConstants& c) {
  Requirements("constant_A").need(c.r0, "r0").need(c.eta_sq, "eta_sq").need(c.mu0, "mu0")
      .need_sigmas(c).check();
  const double t0 = theta0_of(c);
  require_unit_interval(t0, "constant_A");
  const double eta = std::sqrt(*c.eta_sq);
  return std::max(*c.r0, *c.mu0 * eta / (1.0 - std::sqrt(t0)));
}

double constant_B(const ProblemConstants& c) {
  Requirements("constant_B").need(c.mean_sq_lipschitz, "mean_sq_lipschitz").need(c.eta_sq, "eta_sq")
      .check();
  return std::sqrt(2.0 * *c.eta_sq) + constant_A(c) * std::sqrt(2.0 * *c.mean_sq_lipschitz);
}

double constant_D(const ProblemConstants& c, double gamma, int kappa_power) {
  Requirements("constant_D")
      .need(c.grad_F_norm, "grad_F_norm")
      .need(c.dist_x0, "dist_x0")
      .need(c.kappa, "kappa")
      .need(c.mean_sq_lipschitz, "mean_sq_lipschitz")
      .need(c.eta_sq, "eta_sq")
      .need(c.r0, "r0")
      .need(c.mu0, "mu0")
      .need_sigmas(c)
      .check();
  const double kappa = *c.kappa;
  const double kk = kappa_power == 2 ? kappa * kappa : kappa;
  const double mu0 = *c.mu0;
  const double A = constant_A(c);
  const double B = constant_B(c);
  const double eta = std::sqrt(*c.eta_sq);
  const double L2 = *c.mean_sq_lipschitz;

  const double log_reg = log_regularity(kappa);
  double transient = 0.0;
  if (std::isinf(log_reg)) {
    if (*c.dist_x0 > 0.0) {
      throw std::domain_error(
          "constant_D: kappa = 1 with an infeasible starting point makes the bound singular");
    }
  } else {
    transient = (*c.dist_x0 + 2.0 * mu0 * kk * B) / (mu0 * log_reg);
  }
  const double bracket = transient + std::pow(3.0, gamma) * B * kk;
  return 4.0 * *c.grad_F_norm * bracket + 2.0 * eta * std::sqrt(2.0 * eta * eta + 2.0 * L2 * A * A) +
         2.0 * eta * A * std::sqrt(L2);
}

ConvexBounds convex_bounds(const ProblemConstants& c, std::uint64_t k,
                           const StepsizeSchedule& schedule) {
  Requirements("convex_bounds")
      .need(c.r0, "r0")
      .need(c.kappa, "kappa")
      .need(c.mean_sq_lipschitz, "mean_sq_lipschitz")
      .check();
  if (k < 1) throw std::invalid_argument("convex_bounds: k must be >= 1");
  double mu1 = 0.0;
  double mu2 = 0.0;
  for (std::uint64_t i = 0; i < k; ++i) {
    const double mu = schedule.at(i);
    mu1 += mu;
    mu2 += mu * mu;
  }
  const double mu0 = schedule.at(0);
  const double kappa = *c.kappa;
  const double L2 = *c.mean_sq_lipschitz;
  const double r0 = *c.r0;
  const double R = mu0 * kappa * (r0 * r0 + L2 * mu2);
  const double ratio = mu2 / mu1 + 2.0 * mu0;

  ConvexBounds out;
  out.suboptimality_upper = R / (2.0 * mu0 * kappa * mu1);
  out.suboptimality_lower = -kappa * L2 * ratio - std::sqrt(L2 * R / mu1);
  out.feasibility_sq_upper = 2.0 * kappa * kappa * L2 * ratio * ratio + 2.0 * R / mu1;
  return out;
}

ConstantStepPlan constant_step_plan(double epsilon, const ProblemConstants& c) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("constant_step_plan: epsilon must be > 0");
  Requirements("constant_step_plan")
      .need(c.r0, "r0")
      .need(c.kappa, "kappa")
      .need(c.mean_sq_lipschitz, "mean_sq_lipschitz")
      .check();
  const double kappa = *c.kappa;
  const double L2 = *c.mean_sq_lipschitz;
  const double r0 = *c.r0;
  if (!(L2 > 0.0)) throw std::invalid_argument("constant_step_plan: E[L^2] must be positive");
  const double factor = 3.0 * kappa + std::sqrt(2.0 * kappa);

  ConstantStepPlan plan;
  plan.mu = epsilon / (L2 * factor);
  const double k_min = L2 * r0 * r0 / (epsilon * epsilon) * std::max(1.0, factor * factor);
  if (!(k_min < 9.2e18)) throw std::overflow_error("constant_step_plan: K exceeds 64-bit range");
  plan.K = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(k_min)));
  if (r0 < 1.0) plan.warnings.emplace_back("r0 < 1: the plan assumes ||x0 - x*|| >= 1");
  if (L2 < 2.0) plan.warnings.emplace_back("E[L^2] < 2: the plan assumes E[L^2] >= 2");
  return plan;
}

ConstantStepEnvelope constant_step_envelope(const ProblemConstants& c, double mu, std::uint64_t k) {
  Requirements("constant_step_envelope").need(c.r0, "r0").need(c.eta_sq, "eta_sq").need_sigmas(c)
      .check();
  if (!(mu > 0.0)) throw std::invalid_argument("constant_step_envelope: mu must be > 0");
  ConstantStepEnvelope out;
  out.theta_bar = c.sigmas.empty() ? *c.theta0 : mean_theta_sq(c, mu);
  if (!(out.theta_bar < 1.0)) {
    throw std::domain_error("constant_step_envelope: E[theta_S(mu)^2] >= 1 (no strong convexity)");
  }
  const double r0 = *c.r0;
  const double shrink = 1.0 - std::sqrt(out.theta_bar);
  const double eta = std::sqrt(*c.eta_sq);
  out.radius = mu * eta / shrink;
  out.value = 2.0 * power(out.theta_bar, static_cast<double>(k)) * r0 * r0 +
              2.0 * out.radius * out.radius;
  return out;
}

double boundedness_cap(const ProblemConstants& c) { return constant_A(c); }

double strongly_convex_bound(const ProblemConstants& c, std::uint64_t k, double gamma) {
  if (k < 1) throw std::invalid_argument("strongly_convex_bound: k must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("strongly_convex_bound: gamma must lie in (0, 1]");
  }
  Requirements("strongly_convex_bound").need(c.r0, "r0").need(c.mu0, "mu0").need_sigmas(c).check();
  const double t0 = theta0_of(c);
  require_unit_interval(t0, "strongly_convex_bound");
  const double r0 = *c.r0;
  const double mu0 = *c.mu0;
  const double kd = static_cast<double>(k);

  if (gamma == 1.0) {
    const double head = power(t0, phi(0.0, kd)) * r0 * r0;
    const double L = std::log(1.0 / t0);
    const double inv_e = 1.0 / std::numbers::e;
    if (std::abs(t0 - inv_e) <= 1e-12 * inv_e) return head + 2.0 * mu0 * mu0 * std::log(kd) / kd;
    if (t0 < inv_e) return head + 2.0 * mu0 * mu0 / (kd * (L - 1.0));
    return head + power(2.0 / kd, L) * mu0 * mu0 / (1.0 - L);
  }

  const double D = constant_D(c, gamma, 1);
  const double half = (kd + 1.0) / 2.0;
  const double pk = phi(1.0 - gamma, kd);
  const double ph = phi(1.0 - gamma, half);
  const double term1 = power(t0, pk) * r0 * r0;
  const double term2 = D * power(t0, pk - ph) * mu0 * mu0 * (phi(1.0 - 2.0 * gamma, half) + 2.0);
  const double term3 = D * mu0 * mu0 * std::pow(4.0, gamma) / ((1.0 - t0) * std::pow(kd, gamma));
  return term1 + term2 + term3;
}

namespace {

constexpr std::uint64_t kSearchLimit = std::uint64_t{1} << 62;

// Smallest k >= 1 with pred(k) true, assuming pred is monotone on the tail.
template <class Pred>
std::uint64_t first_true(Pred pred, const char* where) {
  std::uint64_t hi = 1;
  while (!pred(hi)) {
    if (hi >= kSearchLimit) {
      throw std::domain_error(std::string(where) + ": target not reached within 2^62");
    }
    hi *= 2;
  }
  if (hi == 1) return 1;
  std::uint64_t lo = hi / 2;  // pred(lo) is false
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (pred(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace

std::uint64_t iteration_complexity(double epsilon, double gamma, const ProblemConstants& c) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("iteration_complexity: epsilon must be > 0");
  return first_true([&](std::uint64_t k) { return strongly_convex_bound(c, k, gamma) <= epsilon; },
                    "iteration_complexity");
}

RsppPlan rspp_plan(double epsilon, double gamma, const ProblemConstants& c) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("rspp_plan: epsilon must be > 0");
  if (!(gamma > 0.0)) throw std::invalid_argument("rspp_plan: gamma must be > 0");
  Requirements("rspp_plan").need(c.r0, "r0").need(c.mu0, "mu0").need_sigmas(c).check();
  const double t0 = theta0_of(c);
  require_unit_interval(t0, "rspp_plan");
  const double r0 = *c.r0;
  const double mu0 = *c.mu0;
  const double Dr = constant_D(c, gamma, 2);

  const double linear_part = std::log(2.0 * r0 * r0 / epsilon) / std::log(1.0 / t0);
  double epochs = std::max(1.0, linear_part);
  if (gamma < 1.0) {
    const double C = 1.0 / (2.0 * (1.0 - gamma) * std::log(1.0 / std::sqrt(t0))) +
                     mu0 * mu0 / ((1.0 - t0) * (1.0 - t0));
    const double noise_part = std::pow(std::pow(2.0, gamma + 1.0) * Dr * C / epsilon, 1.0 / gamma);
    epochs = std::max(epochs, noise_part);
    if (!(epochs < 9.2e18)) throw std::overflow_error("rspp_plan: epoch count exceeds 64-bit range");
  } else {
    // The closed-form C is singular for gamma >= 1; bound the partial sum
    // sum_{i<=m} mu_i by mu0 (1 + phi_{1-gamma}(m)) and search directly.
    const auto noise = [&](std::uint64_t t) {
      const double m = std::ceil(static_cast<double>(t) / 2.0);
      const double partial = mu0 * (1.0 + phi(1.0 - gamma, m));
      const double mu_m = mu0 / std::pow(m, gamma);
      return Dr * (power(t0, m) * mu0 * partial / (1.0 - t0) + mu_m * mu0 / ((1.0 - t0) * (1.0 - t0)));
    };
    const std::uint64_t t_noise =
        first_true([&](std::uint64_t t) { return noise(t) <= epsilon / 2.0; }, "rspp_plan");
    epochs = std::max(epochs, static_cast<double>(t_noise));
  }
  RsppPlan plan;
  plan.epochs = static_cast<std::uint64_t>(std::ceil(epochs));
  const double T = static_cast<double>(plan.epochs);
  plan.total_iterations_lower_bound = std::pow(T, 1.0 + gamma) / (1.0 + gamma);
  return plan;
}

}  // namespace spp
