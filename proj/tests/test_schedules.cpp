#include "doctest.h"

#include "spp/schedules.hpp"

#include <cmath>
#include <vector>

using namespace spp;

TEST_CASE("constant and decaying schedules") {
  const auto c = StepsizeSchedule::constant(0.3);
  CHECK(c.kind() == ScheduleKind::Constant);
  CHECK(c.at(0) == 0.3);
  CHECK(c.at(12345) == 0.3);
  CHECK(c.gamma() == 0.0);

  const auto d = StepsizeSchedule::poly_decay(2.0, 0.5);
  CHECK(d.at(0) == 2.0);
  CHECK(d.at(1) == 2.0);
  CHECK(d.at(4) == doctest::Approx(1.0));
  CHECK(d.at(100) == doctest::Approx(0.2));
  CHECK(stepsize_at(d, 16) == doctest::Approx(0.5));
  for (std::uint64_t k = 1; k < 1000; ++k) CHECK(d.at(k + 1) <= d.at(k));

  CHECK_THROWS_AS(StepsizeSchedule::constant(0.0), std::invalid_argument);
  CHECK_THROWS_AS(StepsizeSchedule::poly_decay(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(StepsizeSchedule::poly_decay(-1.0, 1.0), std::invalid_argument);
}

TEST_CASE("phi helper") {
  CHECK(phi(0.0, std::exp(1.0)) == doctest::Approx(1.0));
  CHECK(phi(1.0, 5.0) == doctest::Approx(4.0));
  CHECK(phi(-1.0, 4.0) == doctest::Approx(0.75));
  CHECK(phi(0.5, 9.0) == doctest::Approx(4.0));
  for (double a : {-2.0, -0.5, 0.0, 0.25, 1.0, 3.0}) CHECK(phi(a, 1.0) == doctest::Approx(0.0));
  // Continuity in alpha at 0.
  CHECK(phi(1e-10, 7.0) == doctest::Approx(std::log(7.0)).epsilon(1e-8));
  CHECK_THROWS_AS(phi(1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(phi(1.0, -1.0), std::domain_error);
}

TEST_CASE("phi bounds partial sums of k^-gamma") {
  // sum_{i=1}^{k} i^-gamma lies between phi_{1-gamma}(k+1) and 1 + phi_{1-gamma}(k).
  for (double gamma : {0.25, 0.5, 1.0, 2.0}) {
    double sum = 0.0;
    for (int k = 1; k <= 500; ++k) {
      sum += std::pow(k, -gamma);
      CHECK(sum >= phi(1.0 - gamma, k + 1.0) - 1e-12);
      CHECK(sum <= 1.0 + phi(1.0 - gamma, k) + 1e-12);
    }
  }
}

TEST_CASE("contraction factor") {
  CHECK(theta(1.0, 0.0) == 1.0);
  CHECK(theta(0.5, 2.0) == doctest::Approx(0.5));
  CHECK(theta(2.0, 1.5) == doctest::Approx(0.25));
  CHECK_THROWS_AS(theta(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(theta(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("theta0 over a problem") {
  ProblemData data;
  data.n = 2;
  data.losses = {LossComponent::quadratic_norm(1.0, 2), LossComponent::quadratic_norm(3.0, 2),
                 LossComponent::linear_residual(Vector::Ones(2), 0.0)};
  data.loss_weights = {1.0, 1.0, 2.0};
  const StochasticProblem p(data);
  const double mu = 0.5;
  const double expected = 0.25 * std::pow(1.0 / 1.5, 2) + 0.25 * std::pow(1.0 / 2.5, 2) + 0.5;
  CHECK(theta0(p, mu) == doctest::Approx(expected));
  CHECK(mean_theta_sq(p, mu) == doctest::Approx(expected));

  ProblemData flat;
  flat.n = 2;
  flat.losses = {LossComponent::linear_residual(Vector::Ones(2), 0.0)};
  CHECK_THROWS_AS(theta0(StochasticProblem(flat), 1.0), std::domain_error);
}

TEST_CASE("robust ceiling") {
  CHECK(robust_ceil(0.0) == 0);
  CHECK(robust_ceil(2.0) == 2);
  CHECK(robust_ceil(2.0000000000001) == 2);
  CHECK(robust_ceil(1.9999999999999) == 2);
  CHECK(robust_ceil(2.001) == 3);
  CHECK(robust_ceil(std::pow(std::sqrt(3.0), 2.0)) == 3);
  CHECK(robust_ceil(std::pow(9.0, 0.5)) == 3);
  CHECK(robust_ceil(std::sqrt(2.0)) == 2);
  CHECK_THROWS_AS(robust_ceil(-1.0), std::domain_error);
  CHECK_THROWS_AS(robust_ceil(std::nan("")), std::domain_error);
}
