// Stepsize schedules, contraction factors and the phi_alpha helper.
#pragma once

#include "spp/problem.hpp"

#include <cstdint>

namespace spp {

enum class ScheduleKind { Constant, PolyDecay };

class StepsizeSchedule {
 public:
  static StepsizeSchedule constant(double mu);
  /// mu_0 at k = 0, mu_0 / k^gamma for k >= 1.
  static StepsizeSchedule poly_decay(double mu0, double gamma);

  ScheduleKind kind() const { return kind_; }
  double mu0() const { return mu0_; }
  /// 0 for the constant kind.
  double gamma() const { return gamma_; }
  double at(std::uint64_t k) const;

 private:
  StepsizeSchedule(ScheduleKind kind, double mu0, double gamma)
      : kind_(kind), mu0_(mu0), gamma_(gamma) {}

  ScheduleKind kind_;
  double mu0_;
  double gamma_;
};

double stepsize_at(const StepsizeSchedule& schedule, std::uint64_t k);

/// (x^alpha - 1)/alpha, or log x at alpha = 0. Requires x > 0.
double phi(double alpha, double x);

/// 1 / (1 + mu sigma).
double theta(double mu, double sigma);

/// E[theta_S(mu)^2] over the loss distribution.
double mean_theta_sq(const StochasticProblem& problem, double mu);

/// E[theta_S(mu0)^2]; requires E[sigma_{f,S}] > 0.
double theta0(const StochasticProblem& problem, double mu0);

/// ceil(p) that treats p within 1e-9 (relative) of an integer as that integer.
std::uint64_t robust_ceil(double p);

}  // namespace spp
