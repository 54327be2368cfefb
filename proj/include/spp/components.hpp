// Loss components f(.;S): exact value, gradient, proximal map and Moreau
// envelope, plus the per-component curvature constants used by the bounds.
#pragma once

#include "spp/core.hpp"

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <variant>

namespace spp {

/// A convex scalar loss l(t) used by composed components f(x) = l(a^T x).
struct ScalarLoss {
  std::string name;
  std::function<double(double)> value;
  /// Derivative, or any subgradient selection when the loss is nonsmooth.
  /// Must be nondecreasing.
  std::function<double(double)> derivative;
  /// l''(t) when the loss is twice differentiable; empty otherwise.
  std::function<double(double)> second_derivative;
  /// sup of l''; infinity for nonsmooth losses.
  double curvature_bound = std::numeric_limits<double>::infinity();
  /// inf of l''.
  double curvature_floor = 0.0;
};

ScalarLoss squared_error(double target);
/// log(1 + exp(-label * t)), label in {-1, +1}.
ScalarLoss logistic(double label);
/// max(0, 1 - label * t).
ScalarLoss hinge(double label);

enum class LossKind { QuadraticNorm, LinearResidualSquared, BatchLeastSquares, ComposedScalar };

const char* to_string(LossKind kind);

/// One sampled objective term. Immutable after construction; copies share the
/// underlying data.
class LossComponent {
 public:
  /// (lambda/2) ||x - center||^2, center = 0 by default.
  static LossComponent quadratic_norm(double lambda, std::size_t n);
  static LossComponent quadratic_norm(double lambda, Vector center);
  /// (a^T x - b)^2.
  static LossComponent linear_residual(Vector a, double b);
  /// ||A x - b||^2.
  static LossComponent batch_least_squares(Matrix A, Vector b);
  /// l(a^T x).
  static LossComponent composed_scalar(Vector a, ScalarLoss loss);

  LossKind kind() const;
  std::size_t dimension() const { return dimension_; }

  double value(const Vector& x) const;
  /// Gradient (a subgradient for nonsmooth composed losses).
  Vector gradient(const Vector& x) const;

  /// argmin_z f(z) + ||z - x||^2 / (2 mu).
  Vector prox(const Vector& x, double mu) const;
  double moreau_value(const Vector& x, double mu) const;
  /// (x - prox(x, mu)) / mu.
  Vector moreau_gradient(const Vector& x, double mu) const;

  /// Strong convexity modulus sigma >= 0.
  double strong_convexity() const { return sigma_; }
  /// Gradient Lipschitz constant; infinity for nonsmooth composed losses.
  double smoothness() const { return lipschitz_; }
  /// Bound on ||gradient|| over the ball ||x|| <= radius.
  double subgradient_bound(double radius) const;

 private:
  struct Quadratic {
    double lambda;
    Vector center;
  };
  struct Residual {
    Vector a;
    double b;
    double a_sq;
  };
  struct Batch {
    Matrix A;
    Vector b;
    Matrix gram;    // A^T A
    Vector moment;  // A^T b
    double spectral_norm;
  };
  struct Composed {
    Vector a;
    double a_sq;
    ScalarLoss loss;
  };
  using Data = std::variant<Quadratic, Residual, Batch, Composed>;

  LossComponent(std::size_t n, std::shared_ptr<const Data> data, double sigma, double lipschitz);
  void check_input(const Vector& x, const char* where) const;

  std::size_t dimension_;
  std::shared_ptr<const Data> data_;
  double sigma_;
  double lipschitz_;
};

}  // namespace spp
