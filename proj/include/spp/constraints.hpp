// Simple convex sets with exact projections, the Dykstra intersection oracle,
// and an exact projector onto polyhedral intersections.
#pragma once

#include "spp/core.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace spp {

enum class ConstraintKind { WholeSpace, Halfspace, Hyperplane, Box, NonnegOrthant };

const char* to_string(ConstraintKind kind);

/// Inequalities G x <= h and equalities E x = e.
struct LinearSystem {
  Matrix G;
  Vector h;
  Matrix E;
  Vector e;

  explicit LinearSystem(std::size_t n = 0);
  std::size_t dimension() const { return static_cast<std::size_t>(G.cols()); }
  void add_inequality(const Vector& row, double rhs);
  void add_equality(const Vector& row, double rhs);
  /// Largest violation over all rows (0 when feasible).
  double max_violation(const Vector& x) const;
};

class ConstraintSet {
 public:
  static ConstraintSet whole_space(std::size_t n);
  /// {x : c^T x <= d}
  static ConstraintSet halfspace(Vector c, double d);
  /// {x : c^T x = d}
  static ConstraintSet hyperplane(Vector c, double d);
  static ConstraintSet box(Vector lo, Vector hi);
  static ConstraintSet nonneg_orthant(std::size_t n);

  ConstraintKind kind() const { return kind_; }
  std::size_t dimension() const { return dimension_; }

  Vector project(const Vector& x) const;
  double distance(const Vector& x) const;
  double squared_distance(const Vector& x) const;
  bool contains(const Vector& x, double tol = 1e-9) const;

  /// Normal and offset of a halfspace or hyperplane.
  const Vector& normal() const { return a_; }
  double offset() const { return d_; }
  /// Box bounds.
  const Vector& lower() const { return a_; }
  const Vector& upper() const { return b_; }

  /// Appends the set's description as linear rows.
  void append_to(LinearSystem& system) const;

 private:
  ConstraintSet(ConstraintKind kind, std::size_t n, Vector a, Vector b, double d);
  void check_input(const Vector& x, const char* where) const;

  ConstraintKind kind_;
  std::size_t dimension_;
  Vector a_;
  Vector b_;
  double d_ = 0.0;
  double a_sq_ = 0.0;
};

struct DykstraOptions {
  double tol = 1e-10;
  long max_cycles = 100000;
};

/// Projection onto the intersection of `sets` by Dykstra's algorithm.
/// Throws ConvergenceError (carrying the last iterate) at the cycle cap.
Vector project_intersection(const std::vector<ConstraintSet>& sets, const Vector& x,
                            const DykstraOptions& options = {});
double dist_intersection(const std::vector<ConstraintSet>& sets, const Vector& x,
                         double tol = 1e-10);

/// Exact projector onto a polyhedral intersection, solved as a small convex QP
/// by a primal active-set method. Much faster than Dykstra when many sets are
/// nearly parallel, and exact up to rounding.
class PolyhedralProjector {
 public:
  PolyhedralProjector() = default;
  /// `feasible` must lie in every set (within 1e-8); when absent one is found
  /// with Dykstra.
  PolyhedralProjector(const std::vector<ConstraintSet>& sets, std::size_t n,
                      std::optional<Vector> feasible = std::nullopt);

  std::size_t dimension() const { return system_ ? system_->dimension() : 0; }
  const LinearSystem& system() const { return *system_; }
  const Vector& feasible_point() const { return feasible_; }

  Vector project(const Vector& x) const;
  double distance(const Vector& x) const;
  bool contains(const Vector& x, double tol = 1e-9) const;

 private:
  std::shared_ptr<const LinearSystem> system_;
  Vector feasible_;
};

}  // namespace spp
