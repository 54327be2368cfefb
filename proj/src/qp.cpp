#include "spp/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace spp {
namespace {

constexpr double kStartTolerance = 1e-8;
constexpr double kActiveTolerance = 1e-9;

// Normalizes rows to unit length so tolerances are in distance units.
// Returns the scales; zero rows get scale 0 and are checked for consistency.
Vector normalize_rows(Matrix& M, Vector& rhs, bool equality, const char* where) {
  Vector scale(M.rows());
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    const double s = M.row(i).norm();
    scale[i] = s;
    if (s > 0.0) {
      M.row(i) /= s;
      rhs[i] /= s;
    } else if (equality ? rhs[i] != 0.0 : rhs[i] < 0.0) {
      throw std::invalid_argument(std::string(where) + ": inconsistent zero constraint row " +
                                  std::to_string(i));
    }
  }
  return scale;
}

bool independent_of(const Matrix& rows, const Vector& candidate) {
  if (rows.rows() == 0) return candidate.norm() > 0.0;
  if (rows.rows() >= rows.cols()) return false;
  Matrix stacked(rows.rows() + 1, rows.cols());
  stacked << rows, candidate.transpose();
  Eigen::ColPivHouseholderQR<Matrix> qr(stacked.transpose());
  qr.setThreshold(1e-10);
  return qr.rank() == stacked.rows();
}

}  // namespace

QpResult solve_qp(const Matrix& Q, const Vector& c, const LinearSystem& constraints,
                  const Vector& start, const QpOptions& options) {
  const Eigen::Index n = Q.rows();
  if (Q.cols() != n) throw DimensionError("solve_qp: Q must be square");
  require_dimension(c, static_cast<std::size_t>(n), "solve_qp");
  require_dimension(start, static_cast<std::size_t>(n), "solve_qp");
  if (static_cast<Eigen::Index>(constraints.dimension()) != n) {
    throw DimensionError("solve_qp: constraint dimension does not match Q");
  }

  Matrix G = constraints.G;
  Vector h = constraints.h;
  Matrix Eraw = constraints.E;
  Vector eraw = constraints.e;
  const Vector g_scale = normalize_rows(G, h, false, "solve_qp");
  const Vector e_scale_raw = normalize_rows(Eraw, eraw, true, "solve_qp");

  // Keep a linearly independent subset of the equalities.
  std::vector<Eigen::Index> eq_rows;
  Matrix E(0, n);
  for (Eigen::Index i = 0; i < Eraw.rows(); ++i) {
    if (e_scale_raw[i] == 0.0) continue;
    if (independent_of(E, Eraw.row(i).transpose())) {
      E.conservativeResize(E.rows() + 1, Eigen::NoChange);
      E.row(E.rows() - 1) = Eraw.row(i);
      eq_rows.push_back(i);
    }
  }
  Vector e(static_cast<Eigen::Index>(eq_rows.size()));
  for (std::size_t k = 0; k < eq_rows.size(); ++k) e[static_cast<Eigen::Index>(k)] = eraw[eq_rows[k]];

  Vector x = start;
  {
    double violation = 0.0;
    if (G.rows() > 0) violation = std::max(violation, (G * x - h).maxCoeff());
    if (Eraw.rows() > 0) violation = std::max(violation, (Eraw * x - eraw).cwiseAbs().maxCoeff());
    if (violation > kStartTolerance * (1.0 + x.norm())) {
      throw std::invalid_argument("solve_qp: start point violates constraints by " +
                                  std::to_string(violation));
    }
  }

  const Eigen::Index mi = G.rows();
  const Eigen::Index me = E.rows();
  std::vector<char> in_working(static_cast<std::size_t>(mi), 0);
  std::vector<Eigen::Index> working;
  Vector slacks = h - G * x;
  {
    Matrix rows = E;
    for (Eigen::Index i = 0; i < mi; ++i) {
      if (g_scale[i] == 0.0) continue;
      if (slacks[i] > kActiveTolerance) continue;
      if (rows.rows() >= n) break;
      if (independent_of(rows, G.row(i).transpose())) {
        rows.conservativeResize(rows.rows() + 1, Eigen::NoChange);
        rows.row(rows.rows() - 1) = G.row(i);
        working.push_back(i);
        in_working[static_cast<std::size_t>(i)] = 1;
      }
    }
  }

  const long cap = options.max_iterations > 0 ? options.max_iterations
                                              : 10 * static_cast<long>(mi + n) + 200;
  const double tol = options.tol;
  QpResult result;
  for (long iter = 0; iter < cap; ++iter) {
    const Eigen::Index w = static_cast<Eigen::Index>(working.size());
    const Eigen::Index m = me + w;
    Matrix At(n, m);
    Vector residual(m);
    for (Eigen::Index j = 0; j < me; ++j) {
      At.col(j) = E.row(j).transpose();
      residual[j] = e[j] - E.row(j).dot(x);
    }
    for (Eigen::Index j = 0; j < w; ++j) {
      const Eigen::Index row = working[static_cast<std::size_t>(j)];
      At.col(me + j) = G.row(row).transpose();
      residual[me + j] = h[row] - G.row(row).dot(x);
    }
    // Null-space step: a range-space part that restores the working
    // constraints exactly, then the minimizer over their null space.
    const Vector grad = Q * x + c;
    Vector p_range = Vector::Zero(n);
    Vector p_null = Vector::Zero(n);
    Matrix Y;
    Matrix R;
    Matrix Z;
    if (m > 0) {
      Eigen::HouseholderQR<Matrix> qr(At);
      const Matrix basis = qr.householderQ();
      Y = basis.leftCols(m);
      Z = basis.rightCols(n - m);
      R = qr.matrixQR().topRows(m).template triangularView<Eigen::Upper>();
      p_range = Y * R.transpose().triangularView<Eigen::Lower>().solve(residual);
    } else {
      Z = Matrix::Identity(n, n);
    }
    if (Z.cols() > 0) {
      const Matrix reduced = Z.transpose() * Q * Z;
      Eigen::LDLT<Matrix> ldlt(reduced);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw NumericalError("solve_qp: reduced Hessian is not positive definite");
      }
      p_null = -Z * ldlt.solve(Z.transpose() * (grad + Q * p_range));
    }
    if (!p_range.allFinite() || !p_null.allFinite()) {
      throw NumericalError("solve_qp: working set is degenerate");
    }

    if (p_null.norm() <= tol * (1.0 + x.norm())) {
      x += p_range;
      if (mi > 0) slacks -= G * p_range;
      Vector lambda = Vector::Zero(m);
      if (m > 0) {
        lambda = R.triangularView<Eigen::Upper>().solve(-(Y.transpose() * (Q * x + c)));
      }
      Eigen::Index drop = -1;
      double most_negative = -tol * (1.0 + grad.norm());
      for (Eigen::Index j = 0; j < w; ++j) {
        if (lambda[me + j] < most_negative) {
          most_negative = lambda[me + j];
          drop = j;
        }
      }
      if (drop < 0) {
        result.x = x;
        result.iterations = iter;
        result.inequality_multipliers = Vector::Zero(mi);
        for (Eigen::Index j = 0; j < w; ++j) {
          const Eigen::Index row = working[static_cast<std::size_t>(j)];
          result.inequality_multipliers[row] = std::max(0.0, lambda[me + j]) / g_scale[row];
          result.active.push_back(static_cast<int>(row));
        }
        result.equality_multipliers = Vector::Zero(Eraw.rows());
        for (std::size_t k = 0; k < eq_rows.size(); ++k) {
          const Eigen::Index row = eq_rows[k];
          result.equality_multipliers[row] =
              lambda[static_cast<Eigen::Index>(k)] / e_scale_raw[row];
        }
        std::sort(result.active.begin(), result.active.end());
        return result;
      }
      in_working[static_cast<std::size_t>(working[static_cast<std::size_t>(drop)])] = 0;
      working.erase(working.begin() + drop);
      continue;
    }

    const Vector p = p_range + p_null;
    double alpha = 1.0;
    Eigen::Index blocking = -1;
    const double p_norm = p.norm();
    const Vector rates = G * p;
    for (Eigen::Index i = 0; i < mi; ++i) {
      if (in_working[static_cast<std::size_t>(i)] || g_scale[i] == 0.0) continue;
      const double rate = rates[i];
      if (rate <= 1e-14 * p_norm) continue;
      const double slack = std::max(0.0, slacks[i]);
      const double ratio = slack / rate;
      if (ratio < alpha) {
        alpha = ratio;
        blocking = i;
      }
    }
    x += alpha * p;
    slacks -= alpha * rates;
    if (blocking >= 0) {
      working.push_back(blocking);
      in_working[static_cast<std::size_t>(blocking)] = 1;
    }
  }
  throw ConvergenceError("solve_qp: active-set method did not converge within " +
                             std::to_string(cap) + " iterations",
                         x, cap);
}

}  // namespace spp
