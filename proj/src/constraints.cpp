#include "spp/constraints.hpp"

#include "spp/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace spp {

const char* to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::WholeSpace: return "whole-space";
    case ConstraintKind::Halfspace: return "halfspace";
    case ConstraintKind::Hyperplane: return "hyperplane";
    case ConstraintKind::Box: return "box";
    case ConstraintKind::NonnegOrthant: return "nonneg-orthant";
  }
  return "unknown";
}

LinearSystem::LinearSystem(std::size_t n) {
  const auto cols = static_cast<Eigen::Index>(n);
  G.resize(0, cols);
  E.resize(0, cols);
}

namespace {

void append_row(Matrix& M, Vector& rhs, const Vector& row, double value) {
  const Eigen::Index r = M.rows();
  M.conservativeResize(r + 1, Eigen::NoChange);
  M.row(r) = row.transpose();
  rhs.conservativeResize(r + 1);
  rhs[r] = value;
}

}  // namespace

void LinearSystem::add_inequality(const Vector& row, double rhs) {
  require_dimension(row, dimension(), "LinearSystem::add_inequality");
  append_row(G, h, row, rhs);
}

void LinearSystem::add_equality(const Vector& row, double rhs) {
  require_dimension(row, dimension(), "LinearSystem::add_equality");
  append_row(E, e, row, rhs);
}

double LinearSystem::max_violation(const Vector& x) const {
  require_dimension(x, dimension(), "LinearSystem::max_violation");
  double worst = 0.0;
  if (G.rows() > 0) worst = std::max(worst, (G * x - h).maxCoeff());
  if (E.rows() > 0) worst = std::max(worst, (E * x - e).cwiseAbs().maxCoeff());
  return worst;
}

ConstraintSet::ConstraintSet(ConstraintKind kind, std::size_t n, Vector a, Vector b, double d)
    : kind_(kind), dimension_(n), a_(std::move(a)), b_(std::move(b)), d_(d) {
  a_sq_ = a_.squaredNorm();
}

ConstraintSet ConstraintSet::whole_space(std::size_t n) {
  return ConstraintSet(ConstraintKind::WholeSpace, n, Vector(), Vector(), 0.0);
}

ConstraintSet ConstraintSet::halfspace(Vector c, double d) {
  if (!c.allFinite() || !std::isfinite(d)) throw std::invalid_argument("halfspace: non-finite data");
  if (!(c.squaredNorm() > 0.0)) throw std::invalid_argument("halfspace: normal must be nonzero");
  const auto n = static_cast<std::size_t>(c.size());
  return ConstraintSet(ConstraintKind::Halfspace, n, std::move(c), Vector(), d);
}

ConstraintSet ConstraintSet::hyperplane(Vector c, double d) {
  if (!c.allFinite() || !std::isfinite(d)) throw std::invalid_argument("hyperplane: non-finite data");
  if (!(c.squaredNorm() > 0.0)) throw std::invalid_argument("hyperplane: normal must be nonzero");
  const auto n = static_cast<std::size_t>(c.size());
  return ConstraintSet(ConstraintKind::Hyperplane, n, std::move(c), Vector(), d);
}

ConstraintSet ConstraintSet::box(Vector lo, Vector hi) {
  if (lo.size() != hi.size()) throw DimensionError("box: lower and upper bounds differ in size");
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (std::isnan(lo[i]) || std::isnan(hi[i]) || lo[i] > hi[i]) {
      throw std::invalid_argument("box: need lo <= hi componentwise (index " + std::to_string(i) +
                                  ")");
    }
  }
  const auto n = static_cast<std::size_t>(lo.size());
  return ConstraintSet(ConstraintKind::Box, n, std::move(lo), std::move(hi), 0.0);
}

ConstraintSet ConstraintSet::nonneg_orthant(std::size_t n) {
  return ConstraintSet(ConstraintKind::NonnegOrthant, n, Vector(), Vector(), 0.0);
}

void ConstraintSet::check_input(const Vector& x, const char* where) const {
  require_dimension(x, dimension_, where);
}

Vector ConstraintSet::project(const Vector& x) const {
  check_input(x, "ConstraintSet::project");
  switch (kind_) {
    case ConstraintKind::WholeSpace: return x;
    case ConstraintKind::Halfspace: {
      const double excess = a_.dot(x) - d_;
      if (excess <= 0.0) return x;
      return x - (excess / a_sq_) * a_;
    }
    case ConstraintKind::Hyperplane: return x - ((a_.dot(x) - d_) / a_sq_) * a_;
    case ConstraintKind::Box: return x.cwiseMax(a_).cwiseMin(b_);
    case ConstraintKind::NonnegOrthant: return x.cwiseMax(0.0);
  }
  return x;
}

double ConstraintSet::squared_distance(const Vector& x) const {
  check_input(x, "ConstraintSet::squared_distance");
  switch (kind_) {
    case ConstraintKind::WholeSpace: return 0.0;
    case ConstraintKind::Halfspace: {
      const double excess = std::max(0.0, a_.dot(x) - d_);
      return excess * excess / a_sq_;
    }
    case ConstraintKind::Hyperplane: {
      const double excess = a_.dot(x) - d_;
      return excess * excess / a_sq_;
    }
    default: return (x - project(x)).squaredNorm();
  }
}

double ConstraintSet::distance(const Vector& x) const { return std::sqrt(squared_distance(x)); }

bool ConstraintSet::contains(const Vector& x, double tol) const { return distance(x) <= tol; }

void ConstraintSet::append_to(LinearSystem& system) const {
  if (system.dimension() != dimension_) {
    throw DimensionError("ConstraintSet::append_to: system dimension " +
                         std::to_string(system.dimension()) + " vs set dimension " +
                         std::to_string(dimension_));
  }
  const auto n = static_cast<Eigen::Index>(dimension_);
  switch (kind_) {
    case ConstraintKind::WholeSpace: break;
    case ConstraintKind::Halfspace: system.add_inequality(a_, d_); break;
    case ConstraintKind::Hyperplane: system.add_equality(a_, d_); break;
    case ConstraintKind::Box:
      for (Eigen::Index i = 0; i < n; ++i) {
        const Vector unit = Vector::Unit(n, i);
        if (std::isfinite(b_[i])) system.add_inequality(unit, b_[i]);
        if (std::isfinite(a_[i])) system.add_inequality(-unit, -a_[i]);
      }
      break;
    case ConstraintKind::NonnegOrthant:
      for (Eigen::Index i = 0; i < n; ++i) system.add_inequality(-Vector::Unit(n, i), 0.0);
      break;
  }
}

Vector project_intersection(const std::vector<ConstraintSet>& sets, const Vector& x,
                            const DykstraOptions& options) {
  if (sets.empty()) return x;
  if (!(options.tol > 0.0)) throw std::invalid_argument("project_intersection: tol must be > 0");
  for (const auto& s : sets) require_dimension(x, s.dimension(), "project_intersection");
  if (sets.size() == 1) return sets.front().project(x);

  Vector current = x;
  std::vector<Vector> increments(sets.size(), Vector::Zero(x.size()));
  Vector cycle_start(x.size());
  Vector shifted(x.size());
  for (long cycle = 0; cycle < options.max_cycles; ++cycle) {
    cycle_start = current;
    double increment_change = 0.0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      shifted = current + increments[i];
      current = sets[i].project(shifted);
      Vector next_increment = shifted - current;
      increment_change += (next_increment - increments[i]).squaredNorm();
      increments[i] = std::move(next_increment);
    }
    const double displacement = (current - cycle_start).norm();
    if (displacement < options.tol && std::sqrt(increment_change) < options.tol) return current;
  }
  throw ConvergenceError("project_intersection: Dykstra did not converge within " +
                             std::to_string(options.max_cycles) + " cycles",
                         current, options.max_cycles);
}

double dist_intersection(const std::vector<ConstraintSet>& sets, const Vector& x, double tol) {
  DykstraOptions options;
  options.tol = tol;
  return (x - project_intersection(sets, x, options)).norm();
}

PolyhedralProjector::PolyhedralProjector(const std::vector<ConstraintSet>& sets, std::size_t n,
                                         std::optional<Vector> feasible) {
  auto system = std::make_shared<LinearSystem>(n);
  for (const auto& s : sets) s.append_to(*system);
  if (feasible) {
    require_dimension(*feasible, n, "PolyhedralProjector");
    feasible_ = std::move(*feasible);
  } else {
    feasible_ = project_intersection(sets, Vector::Zero(static_cast<Eigen::Index>(n)));
  }
  const double violation = system->max_violation(feasible_);
  if (violation > 1e-8 * (1.0 + feasible_.norm())) {
    throw std::invalid_argument("PolyhedralProjector: reference point violates constraints by " +
                                std::to_string(violation));
  }
  system_ = std::move(system);
}

bool PolyhedralProjector::contains(const Vector& x, double tol) const {
  return system_->max_violation(x) <= tol;
}

Vector PolyhedralProjector::project(const Vector& x) const {
  if (!system_) throw std::logic_error("PolyhedralProjector: not initialised");
  require_dimension(x, dimension(), "PolyhedralProjector::project");
  const LinearSystem& sys = *system_;
  if (sys.E.rows() == 0 && (sys.G.rows() == 0 || (sys.G * x - sys.h).maxCoeff() <= 0.0)) return x;

  // Start from the last feasible point on the segment feasible_ -> x.
  Vector start = feasible_;
  if (sys.E.rows() == 0) {
    const Vector dir = x - feasible_;
    const Vector rate = sys.G * dir;
    const Vector slack = (sys.h - sys.G * feasible_).cwiseMax(0.0);
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < rate.size(); ++i) {
      if (rate[i] > 0.0) alpha = std::min(alpha, slack[i] / rate[i]);
    }
    start = feasible_ + alpha * dir;
  }
  const auto n = static_cast<Eigen::Index>(dimension());
  return solve_qp(Matrix::Identity(n, n), -x, sys, start).x;
}

double PolyhedralProjector::distance(const Vector& x) const { return (x - project(x)).norm(); }

}  // namespace spp
