#include "spp/schedules.hpp"

#include <cmath>
#include <string>

namespace spp {

StepsizeSchedule StepsizeSchedule::constant(double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw std::invalid_argument("StepsizeSchedule::constant: mu must be positive and finite");
  }
  return StepsizeSchedule(ScheduleKind::Constant, mu, 0.0);
}

StepsizeSchedule StepsizeSchedule::poly_decay(double mu0, double gamma) {
  if (!(mu0 > 0.0) || !std::isfinite(mu0)) {
    throw std::invalid_argument("StepsizeSchedule::poly_decay: mu0 must be positive and finite");
  }
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("StepsizeSchedule::poly_decay: gamma must be positive and finite");
  }
  return StepsizeSchedule(ScheduleKind::PolyDecay, mu0, gamma);
}

double StepsizeSchedule::at(std::uint64_t k) const {
  if (kind_ == ScheduleKind::Constant || k == 0) return mu0_;
  return mu0_ / std::pow(static_cast<double>(k), gamma_);
}

double stepsize_at(const StepsizeSchedule& schedule, std::uint64_t k) { return schedule.at(k); }

double phi(double alpha, double x) {
  if (!(x > 0.0)) throw std::domain_error("phi: x must be positive, got " + std::to_string(x));
  if (alpha == 0.0) return std::log(x);
  // expm1 keeps the small-alpha branch accurate.
  return std::expm1(alpha * std::log(x)) / alpha;
}

double theta(double mu, double sigma) {
  if (!(mu > 0.0)) throw std::invalid_argument("theta: mu must be positive");
  if (!(sigma >= 0.0)) throw std::invalid_argument("theta: sigma must be nonnegative");
  return 1.0 / (1.0 + mu * sigma);
}

double mean_theta_sq(const StochasticProblem& problem, double mu) {
  double total = 0.0;
  for (std::size_t i = 0; i < problem.loss_count(); ++i) {
    const double t = theta(mu, problem.loss(i).strong_convexity());
    total += problem.loss_probability(i) * t * t;
  }
  return total;
}

double theta0(const StochasticProblem& problem, double mu0) {
  if (!(problem.mean_strong_convexity() > 0.0)) {
    throw std::domain_error("theta0: every component has sigma = 0 (no strong convexity)");
  }
  return mean_theta_sq(problem, mu0);
}

std::uint64_t robust_ceil(double p) {
  if (!(p >= 0.0) || !std::isfinite(p)) throw std::domain_error("robust_ceil: need finite p >= 0");
  const double r = std::round(p);
  if (std::abs(p - r) <= 1e-9 * std::max(1.0, p)) return static_cast<std::uint64_t>(r);
  return static_cast<std::uint64_t>(std::ceil(p));
}

}  // namespace spp
