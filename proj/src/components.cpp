#include "spp/components.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spp {
namespace {

void require_positive_mu(double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw std::invalid_argument("prox: smoothing parameter mu must be positive, got " +
                                std::to_string(mu));
  }
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr int kScalarProxMaxIterations = 200;
constexpr double kScalarProxTolerance = 1e-12;

// Solves l'(t) + (t - s) / scale = 0, i.e. the prox of l with parameter
// `scale` at s. Newton steps are kept inside a shrinking sign bracket.
double scalar_prox(const ScalarLoss& loss, double s, double scale) {
  const double slope_at_s = loss.derivative(s);
  if (slope_at_s == 0.0) return s;
  double lo = std::min(s, s - scale * slope_at_s);
  double hi = std::max(s, s - scale * slope_at_s);
  const double residual_scale = std::max(1.0, std::abs(slope_at_s));
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < kScalarProxMaxIterations; ++it) {
    const double g = loss.derivative(t) + (t - s) / scale;
    if (std::abs(g) <= kScalarProxTolerance * residual_scale) return t;
    if (g > 0.0) {
      hi = t;
    } else {
      lo = t;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
      return 0.5 * (lo + hi);
    }
    double next = 0.5 * (lo + hi);
    if (loss.second_derivative) {
      const double curvature = loss.second_derivative(t) + 1.0 / scale;
      const double newton = t - g / curvature;
      if (std::isfinite(newton) && newton > lo && newton < hi) next = newton;
    }
    t = next;
  }
  throw NumericalError("prox: scalar subproblem for '" + loss.name + "' did not converge in " +
                       std::to_string(kScalarProxMaxIterations) + " iterations");
}

}  // namespace

ScalarLoss squared_error(double target) {
  ScalarLoss loss;
  loss.name = "squared_error";
  loss.value = [target](double t) { return (t - target) * (t - target); };
  loss.derivative = [target](double t) { return 2.0 * (t - target); };
  loss.second_derivative = [](double) { return 2.0; };
  loss.curvature_bound = 2.0;
  loss.curvature_floor = 2.0;
  return loss;
}

namespace {

void require_label(double label, const char* where) {
  if (label != 1.0 && label != -1.0) {
    throw std::invalid_argument(std::string(where) + ": label must be -1 or +1");
  }
}

}  // namespace

ScalarLoss logistic(double label) {
  require_label(label, "logistic");
  ScalarLoss loss;
  loss.name = "logistic";
  loss.value = [label](double t) {
    const double z = -label * t;
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  };
  loss.derivative = [label](double t) {
    const double z = label * t;
    // -label * sigmoid(-z)
    return z >= 0.0 ? -label * std::exp(-z) / (1.0 + std::exp(-z)) : -label / (1.0 + std::exp(z));
  };
  loss.second_derivative = [label](double t) {
    const double z = std::abs(label * t);
    const double e = std::exp(-z);
    return label * label * e / ((1.0 + e) * (1.0 + e));
  };
  loss.curvature_bound = 0.25 * label * label;
  return loss;
}

ScalarLoss hinge(double label) {
  require_label(label, "hinge");
  ScalarLoss loss;
  loss.name = "hinge";
  loss.value = [label](double t) { return std::max(0.0, 1.0 - label * t); };
  loss.derivative = [label](double t) {
    // Subgradient selection; nondecreasing in t for either label sign.
    return label * t < 1.0 ? -label : 0.0;
  };
  return loss;
}

const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::QuadraticNorm: return "quadratic-norm";
    case LossKind::LinearResidualSquared: return "linear-residual-squared";
    case LossKind::BatchLeastSquares: return "batch-least-squares";
    case LossKind::ComposedScalar: return "composed-scalar";
  }
  return "unknown";
}

LossComponent::LossComponent(std::size_t n, std::shared_ptr<const Data> data, double sigma,
                             double lipschitz)
    : dimension_(n), data_(std::move(data)), sigma_(sigma), lipschitz_(lipschitz) {}

LossComponent LossComponent::quadratic_norm(double lambda, std::size_t n) {
  return quadratic_norm(lambda, Vector::Zero(static_cast<Eigen::Index>(n)));
}

LossComponent LossComponent::quadratic_norm(double lambda, Vector center) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("quadratic_norm: lambda must be finite and nonnegative");
  }
  if (!center.allFinite()) throw std::invalid_argument("quadratic_norm: center must be finite");
  const auto n = static_cast<std::size_t>(center.size());
  return LossComponent(n, std::make_shared<const Data>(Quadratic{lambda, std::move(center)}),
                       lambda, lambda);
}

LossComponent LossComponent::linear_residual(Vector a, double b) {
  if (!a.allFinite() || !std::isfinite(b)) {
    throw std::invalid_argument("linear_residual: parameters must be finite");
  }
  const double a_sq = a.squaredNorm();
  const auto n = static_cast<std::size_t>(a.size());
  const double sigma = n == 1 ? 2.0 * a_sq : 0.0;
  return LossComponent(n, std::make_shared<const Data>(Residual{std::move(a), b, a_sq}), sigma,
                       2.0 * a_sq);
}

LossComponent LossComponent::batch_least_squares(Matrix A, Vector b) {
  if (A.rows() != b.size()) throw DimensionError("batch_least_squares: A rows must match b");
  if (A.rows() == 0 || A.cols() == 0) throw std::invalid_argument("batch_least_squares: empty A");
  if (!A.allFinite() || !b.allFinite()) {
    throw std::invalid_argument("batch_least_squares: parameters must be finite");
  }
  Matrix gram = A.transpose() * A;
  Vector moment = A.transpose() * b;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("batch_least_squares: eigensolve failed");
  const double lo = std::max(0.0, eig.eigenvalues().minCoeff());
  const double hi = std::max(0.0, eig.eigenvalues().maxCoeff());
  const auto n = static_cast<std::size_t>(A.cols());
  return LossComponent(
      n,
      std::make_shared<const Data>(
          Batch{std::move(A), std::move(b), std::move(gram), std::move(moment), std::sqrt(hi)}),
      2.0 * lo, 2.0 * hi);
}

LossComponent LossComponent::composed_scalar(Vector a, ScalarLoss loss) {
  if (!loss.value || !loss.derivative) {
    throw std::invalid_argument("composed_scalar: loss needs value and derivative");
  }
  if (!a.allFinite()) throw std::invalid_argument("composed_scalar: a must be finite");
  const double a_sq = a.squaredNorm();
  const auto n = static_cast<std::size_t>(a.size());
  const double sigma = n == 1 ? loss.curvature_floor * a_sq : 0.0;
  const double lipschitz = loss.curvature_bound * a_sq;
  return LossComponent(n, std::make_shared<const Data>(Composed{std::move(a), a_sq, std::move(loss)}),
                       sigma, lipschitz);
}

LossKind LossComponent::kind() const {
  return std::visit(Overloaded{[](const Quadratic&) { return LossKind::QuadraticNorm; },
                               [](const Residual&) { return LossKind::LinearResidualSquared; },
                               [](const Batch&) { return LossKind::BatchLeastSquares; },
                               [](const Composed&) { return LossKind::ComposedScalar; }},
                    *data_);
}

void LossComponent::check_input(const Vector& x, const char* where) const {
  require_dimension(x, dimension_, where);
}

double LossComponent::value(const Vector& x) const {
  check_input(x, "LossComponent::value");
  return std::visit(
      Overloaded{[&](const Quadratic& q) { return 0.5 * q.lambda * (x - q.center).squaredNorm(); },
                 [&](const Residual& r) {
                   const double res = r.a.dot(x) - r.b;
                   return res * res;
                 },
                 [&](const Batch& bt) { return (bt.A * x - bt.b).squaredNorm(); },
                 [&](const Composed& c) { return c.loss.value(c.a.dot(x)); }},
      *data_);
}

Vector LossComponent::gradient(const Vector& x) const {
  check_input(x, "LossComponent::gradient");
  return std::visit(
      Overloaded{[&](const Quadratic& q) -> Vector { return q.lambda * (x - q.center); },
                 [&](const Residual& r) -> Vector { return 2.0 * (r.a.dot(x) - r.b) * r.a; },
                 [&](const Batch& bt) -> Vector { return 2.0 * (bt.gram * x - bt.moment); },
                 [&](const Composed& c) -> Vector { return c.loss.derivative(c.a.dot(x)) * c.a; }},
      *data_);
}

Vector LossComponent::prox(const Vector& x, double mu) const {
  check_input(x, "LossComponent::prox");
  require_positive_mu(mu);
  return std::visit(
      Overloaded{
          [&](const Quadratic& q) -> Vector {
            return (x + mu * q.lambda * q.center) / (1.0 + mu * q.lambda);
          },
          [&](const Residual& r) -> Vector {
            const double step = 2.0 * mu * (r.a.dot(x) - r.b) / (1.0 + 2.0 * mu * r.a_sq);
            return x - step * r.a;
          },
          [&](const Batch& bt) -> Vector {
            Matrix system = 2.0 * mu * bt.gram;
            system.diagonal().array() += 1.0;
            Eigen::LLT<Matrix> chol(system);
            if (chol.info() != Eigen::Success) {
              throw NumericalError("prox: Cholesky factorization of I + 2 mu A^T A failed");
            }
            return chol.solve(x + 2.0 * mu * bt.moment);
          },
          [&](const Composed& c) -> Vector {
            if (c.a_sq == 0.0) return x;
            const double s = c.a.dot(x);
            const double t = scalar_prox(c.loss, s, mu * c.a_sq);
            return x + ((t - s) / c.a_sq) * c.a;
          }},
      *data_);
}

double LossComponent::moreau_value(const Vector& x, double mu) const {
  const Vector z = prox(x, mu);
  return value(z) + (z - x).squaredNorm() / (2.0 * mu);
}

Vector LossComponent::moreau_gradient(const Vector& x, double mu) const {
  return (x - prox(x, mu)) / mu;
}

double LossComponent::subgradient_bound(double radius) const {
  if (!(radius >= 0.0)) throw std::invalid_argument("subgradient_bound: radius must be >= 0");
  return std::visit(
      Overloaded{[&](const Quadratic& q) { return q.lambda * (radius + q.center.norm()); },
                 [&](const Residual& r) {
                   const double an = std::sqrt(r.a_sq);
                   return 2.0 * an * (an * radius + std::abs(r.b));
                 },
                 [&](const Batch& bt) {
                   return 2.0 * bt.spectral_norm * (bt.spectral_norm * radius + bt.b.norm());
                 },
                 [&](const Composed& c) {
                   const double an = std::sqrt(c.a_sq);
                   const double reach = an * radius;
                   return an * std::max(std::abs(c.loss.derivative(-reach)),
                                        std::abs(c.loss.derivative(reach)));
                 }},
      *data_);
}

}  // namespace spp
