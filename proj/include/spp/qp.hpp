// Dense convex quadratic programs  min 1/2 x^T Q x + c^T x  s.t.  G x <= h, E x = e
// solved by a primal active-set method started from a feasible point.
#pragma once

#include "spp/constraints.hpp"
#include "spp/core.hpp"

#include <vector>

namespace spp {

struct QpOptions {
  /// Relative tolerance on steps and multipliers.
  double tol = 1e-11;
  /// 0 picks a cap proportional to problem size.
  long max_iterations = 0;
};

struct QpResult {
  Vector x;
  /// One multiplier per inequality row (zero for inactive rows).
  Vector inequality_multipliers;
  Vector equality_multipliers;
  std::vector<int> active;
  long iterations = 0;
};

/// Q must be positive definite on the null space of the active constraints.
/// `start` must satisfy the constraints within 1e-8 (after row scaling).
QpResult solve_qp(const Matrix& Q, const Vector& c, const LinearSystem& constraints,
                  const Vector& start, const QpOptions& options = {});

}  // namespace spp
