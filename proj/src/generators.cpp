#include "spp/problems.hpp"

#include "spp/qp.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace spp {

const char* to_string(Family family) {
  switch (family) {
    case Family::ConstrainedLs: return "constrained-ls";
    case Family::RandomLsPolyhedron: return "random-ls-polyhedron";
    case Family::Markowitz: return "markowitz";
    case Family::Feasibility: return "feasibility";
    case Family::FiniteSum: return "finite-sum";
  }
  return "unknown";
}

Family parse_family(const std::string& name) {
  std::string key;
  for (char ch : name) key.push_back(ch == '_' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  for (Family f : {Family::ConstrainedLs, Family::RandomLsPolyhedron, Family::Markowitz,
                   Family::Feasibility, Family::FiniteSum}) {
    if (key == to_string(f)) return f;
  }
  throw std::invalid_argument("unknown problem family '" + name +
                              "' (expected constrained-ls, random-ls-polyhedron, markowitz, "
                              "feasibility or finite-sum)");
}

Matrix random_orthogonal(std::size_t n, RandomSource& rng) {
  const auto N = static_cast<Eigen::Index>(n);
  Matrix G(N, N);
  for (Eigen::Index j = 0; j < N; ++j) {
    for (Eigen::Index i = 0; i < N; ++i) G(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ();
  const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < N; ++j) {
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  }
  return Q;
}

namespace {

void check_spec(const GeneratorSpec& spec, Family expected) {
  if (spec.family != expected) {
    throw std::invalid_argument(std::string("generator for ") + to_string(expected) +
                                " called with family " + to_string(spec.family));
  }
  if (spec.n < 2) throw std::invalid_argument("GeneratorSpec: n must be >= 2");
  if (spec.m < spec.n) throw std::invalid_argument("GeneratorSpec: m must be >= n");
  if (spec.batch > spec.m) throw std::invalid_argument("GeneratorSpec: batch must be <= m");
  if (!(spec.noise >= 0.0)) throw std::invalid_argument("GeneratorSpec: noise must be >= 0");
  if (!(spec.slack > 0.0)) throw std::invalid_argument("GeneratorSpec: slack must be > 0");
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, RandomSource& rng) {
  Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = rng.normal();
  }
  return M;
}

// round(m / (2 batch)) batch components over consecutive rows, the remaining
// rows as elementary residuals. Every row is used exactly once.
void split_rows(const Matrix& A, const Vector& b, std::size_t batch, GeneratedProblem& out,
                std::vector<LossComponent>& losses) {
  const auto m = static_cast<std::size_t>(A.rows());
  std::size_t batches = 0;
  if (batch > 1) {
    batches = static_cast<std::size_t>(std::llround(static_cast<double>(m) / (2.0 * static_cast<double>(batch))));
    batches = std::min(batches, m / batch);
  }
  const auto B = static_cast<Eigen::Index>(batch);
  for (std::size_t j = 0; j < batches; ++j) {
    const auto start = static_cast<Eigen::Index>(j) * B;
    losses.push_back(LossComponent::batch_least_squares(A.middleRows(start, B), b.segment(start, B)));
  }
  for (auto i = static_cast<Eigen::Index>(batches * batch); i < A.rows(); ++i) {
    losses.push_back(LossComponent::linear_residual(A.row(i).transpose(), b[i]));
  }
  out.batch_count = batches;
  out.residual_count = m - batches * batch;
}

std::vector<ConstraintSet> halfspaces(const Matrix& C, const Vector& d) {
  std::vector<ConstraintSet> sets;
  sets.reserve(static_cast<std::size_t>(C.rows()));
  for (Eigen::Index i = 0; i < C.rows(); ++i) sets.push_back(ConstraintSet::halfspace(C.row(i).transpose(), d[i]));
  return sets;
}

// Halfspaces C x <= C center + slack * v with v uniform in (0, 1].
void random_polyhedron(std::size_t count, const Vector& center, double slack, RandomSource& rng,
                       GeneratedProblem& out) {
  out.C = gaussian_matrix(count, static_cast<std::size_t>(center.size()), rng);
  out.d = out.C * center;
  for (Eigen::Index i = 0; i < out.d.size(); ++i) out.d[i] += slack * (1.0 - rng.uniform());
}

}  // namespace

Vector solve_reference_optimum(const ProblemData& data, const Vector& start) {
  const auto n = static_cast<Eigen::Index>(data.n);
  std::vector<double> p(data.losses.size(), 1.0 / static_cast<double>(data.losses.size()));
  if (!data.loss_weights.empty()) {
    double total = 0.0;
    for (double w : data.loss_weights) total += w;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = data.loss_weights[i] / total;
  }
  const auto gradient = [&](const Vector& x) {
    Vector g = Vector::Zero(n);
    for (std::size_t i = 0; i < data.losses.size(); ++i) {
      if (data.losses[i].kind() == LossKind::ComposedScalar) {
        throw std::invalid_argument("solve_reference_optimum: objective is not quadratic");
      }
      g += p[i] * data.losses[i].gradient(x);
    }
    return g;
  };
  const Vector c = gradient(Vector::Zero(n));
  Matrix Q(n, n);
  for (Eigen::Index j = 0; j < n; ++j) Q.col(j) = gradient(Vector::Unit(n, j)) - c;
  Q = 0.5 * (Q + Q.transpose()).eval();

  LinearSystem system(data.n);
  for (const auto& s : data.sets) s.append_to(system);
  return solve_qp(Q, c, system, start).x;
}

GeneratedProblem gen_constrained_ls(const GeneratorSpec& spec, RandomSource& rng) {
  check_spec(spec, Family::ConstrainedLs);
  const std::size_t n = spec.n;
  const auto N = static_cast<Eigen::Index>(n);
  const std::size_t batch = spec.batch == 0 ? n : spec.batch;
  GeneratedProblem out;

  const Matrix Q = random_orthogonal(n, rng);
  Vector spectrum(N);
  for (Eigen::Index k = 0; k < N; ++k) spectrum[k] = 1.0 / static_cast<double>(k + 1);
  out.covariance = Q * spectrum.asDiagonal() * Q.transpose();
  const Matrix root = Q * spectrum.cwiseSqrt().asDiagonal() * Q.transpose();

  const Vector truth = rng.normal_vector(n);
  out.design = gaussian_matrix(spec.m, n, rng) * root;  // rows a_i = H^{1/2} g_i
  out.targets = out.design * truth;
  for (Eigen::Index i = 0; i < out.targets.size(); ++i) out.targets[i] += spec.noise * rng.normal();

  std::vector<LossComponent> losses;
  split_rows(out.design, out.targets, batch, out, losses);

  const std::size_t p = spec.constraints.value_or(losses.size());
  if (spec.active > p) throw std::invalid_argument("gen_constrained_ls: more active constraints than rows");
  out.C = gaussian_matrix(p, n, rng);
  const Vector at_truth = out.C * truth;
  constexpr int kMaxRetries = 100;
  bool ok = false;
  for (int attempt = 0; attempt < kMaxRetries && !ok; ++attempt) {
    out.d = at_truth;
    for (auto i = static_cast<Eigen::Index>(spec.active); i < out.d.size(); ++i) {
      out.d[i] += spec.slack * rng.uniform();
    }
    ok = true;
    for (auto i = static_cast<Eigen::Index>(spec.active); i < out.d.size(); ++i) {
      if (!(out.d[i] - at_truth[i] > 1e-9)) ok = false;
    }
  }
  if (!ok) throw std::runtime_error("gen_constrained_ls: could not draw strictly positive slacks");

  ProblemData data;
  data.family = to_string(Family::ConstrainedLs);
  data.n = n;
  data.losses = std::move(losses);
  data.sets = halfspaces(out.C, out.d);
  data.coupling = spec.coupling;
  data.ground_truth = truth;
  data.feasible_point = truth;
  data.optimum = solve_reference_optimum(data, truth);
  out.problem = StochasticProblem(std::move(data));
  return out;
}

GeneratedProblem gen_random_ls_polyhedron(const GeneratorSpec& spec, RandomSource& rng) {
  check_spec(spec, Family::RandomLsPolyhedron);
  const std::size_t n = spec.n;
  GeneratedProblem out;

  const Vector truth = rng.normal_vector(n);
  // Components carry a factor 1/2: (a^T x - b)^2 / 2 = ((a/sqrt2)^T x - b/sqrt2)^2.
  const double scale = std::sqrt(0.5);
  out.design = gaussian_matrix(spec.m, n, rng);
  out.targets = out.design * truth;
  for (Eigen::Index i = 0; i < out.targets.size(); ++i) out.targets[i] += spec.noise * rng.normal();

  std::vector<LossComponent> losses;
  split_rows(scale * out.design, scale * out.targets, spec.batch == 0 ? 1 : spec.batch, out, losses);

  const std::size_t p = spec.constraints.value_or(spec.m);
  const Vector center = truth + rng.normal_vector(n);
  if (p > 0) random_polyhedron(p, center, spec.slack, rng, out);

  ProblemData data;
  data.family = to_string(Family::RandomLsPolyhedron);
  data.n = n;
  data.losses = std::move(losses);
  if (p > 0) data.sets = halfspaces(out.C, out.d);
  data.coupling = spec.coupling;
  data.ground_truth = truth;
  data.feasible_point = center;
  data.optimum = solve_reference_optimum(data, center);
  out.problem = StochasticProblem(std::move(data));
  return out;
}

GeneratedProblem gen_feasibility(const GeneratorSpec& spec, RandomSource& rng) {
  check_spec(spec, Family::Feasibility);
  if (!(spec.lambda > 0.0)) throw std::invalid_argument("gen_feasibility: lambda must be > 0");
  const std::size_t n = spec.n;
  GeneratedProblem out;
  const Vector center = 2.0 * rng.normal_vector(n);
  random_polyhedron(spec.constraints.value_or(spec.m), center, spec.slack, rng, out);

  ProblemData data;
  data.family = to_string(Family::Feasibility);
  data.n = n;
  data.losses = {LossComponent::quadratic_norm(spec.lambda, n)};
  data.sets = halfspaces(out.C, out.d);
  data.coupling = Coupling::Independent;
  data.feasible_point = center;
  data.optimum = solve_reference_optimum(data, center);
  out.problem = StochasticProblem(std::move(data));
  return out;
}

GeneratedProblem gen_finite_sum(const GeneratorSpec& spec, RandomSource& rng) {
  check_spec(spec, Family::FiniteSum);
  if (!(spec.lambda > 0.0)) throw std::invalid_argument("gen_finite_sum: lambda must be > 0");
  const std::size_t n = spec.n;
  GeneratedProblem out;
  const Vector truth = 2.0 * rng.normal_vector(n);
  out.design = Matrix(static_cast<Eigen::Index>(spec.m), static_cast<Eigen::Index>(n));
  std::vector<LossComponent> losses;
  losses.reserve(spec.m);
  for (std::size_t i = 0; i < spec.m; ++i) {
    Vector center = truth + rng.normal_vector(n);
    out.design.row(static_cast<Eigen::Index>(i)) = center.transpose();
    losses.push_back(LossComponent::quadratic_norm(spec.lambda, std::move(center)));
  }
  const Vector origin = Vector::Zero(static_cast<Eigen::Index>(n));
  random_polyhedron(spec.constraints.value_or(spec.m), origin, spec.slack, rng, out);

  ProblemData data;
  data.family = to_string(Family::FiniteSum);
  data.n = n;
  data.losses = std::move(losses);
  data.sets = halfspaces(out.C, out.d);
  data.coupling = spec.coupling;
  data.ground_truth = truth;
  data.feasible_point = origin;
  data.optimum = solve_reference_optimum(data, origin);
  out.problem = StochasticProblem(std::move(data));
  return out;
}

GeneratedProblem generate(const GeneratorSpec& spec) {
  RandomSource rng(spec.seed);
  switch (spec.family) {
    case Family::ConstrainedLs: return gen_constrained_ls(spec, rng);
    case Family::RandomLsPolyhedron: return gen_random_ls_polyhedron(spec, rng);
    case Family::Feasibility: return gen_feasibility(spec, rng);
    case Family::FiniteSum: return gen_finite_sum(spec, rng);
    case Family::Markowitz: {
      const ReturnsTable table = synthetic_returns(spec.m, spec.n, spec.seed);
      MarkowitzOptions options;
      options.seed = spec.seed;
      MarkowitzInstance inst = build_markowitz(table, options);
      GeneratedProblem out;
      out.problem = std::move(inst.problem);
      out.design = table.returns;
      return out;
    }
  }
  throw std::invalid_argument("generate: unknown family");
}

}  // namespace spp
