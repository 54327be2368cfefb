// Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero when any
// criterion fails.
#include "spp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

using namespace spp;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
  std::printf("%s criterion %2d: %s | %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void run_criterion(int id, const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  report(id, name, o);
}

std::string num(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const AggregateTrace& find_cell(const ExperimentResult& r, Algorithm a, double gamma) {
  for (const auto& t : r.cells) {
    if (t.cell.algorithm == a && t.cell.gamma == gamma) return t;
  }
  throw std::runtime_error("cell not found");
}

std::vector<double> column_k(const AggregateTrace& t) {
  std::vector<double> k;
  for (const auto& r : t.rows) k.push_back(static_cast<double>(r.k));
  return k;
}

std::vector<double> column_sq(const AggregateTrace& t) {
  std::vector<double> y;
  for (const auto& r : t.rows) y.push_back(r.mean_sqdist);
  return y;
}

// ---------------------------------------------------------------------------
// Random components for the operator checks.

LossComponent random_component(RandomSource& rng, std::size_t n) {
  switch (rng.uniform_index(6)) {
    case 0: return LossComponent::quadratic_norm(rng.uniform(0.0, 3.0), 2.0 * rng.normal_vector(n));
    case 1: return LossComponent::linear_residual(rng.normal_vector(n), rng.normal());
    case 2: {
      const std::size_t rows = 1 + rng.uniform_index(2 * n);
      Matrix A(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < A.rows(); ++i) A.row(i) = rng.normal_vector(n).transpose();
      return LossComponent::batch_least_squares(A, rng.normal_vector(rows));
    }
    case 3: return LossComponent::composed_scalar(rng.normal_vector(n), logistic(rng.uniform() < 0.5 ? -1.0 : 1.0));
    case 4: return LossComponent::composed_scalar(rng.normal_vector(n), hinge(rng.uniform() < 0.5 ? -1.0 : 1.0));
    default: return LossComponent::composed_scalar(rng.normal_vector(n), squared_error(rng.normal()));
  }
}

ConstraintSet random_set(RandomSource& rng, std::size_t n) {
  switch (rng.uniform_index(4)) {
    case 0: return ConstraintSet::halfspace(rng.normal_vector(n), rng.normal());
    case 1: return ConstraintSet::hyperplane(rng.normal_vector(n), rng.normal());
    case 2: {
      const Vector lo = rng.normal_vector(n);
      const Vector width = rng.normal_vector(n).cwiseAbs();
      return ConstraintSet::box(lo, lo + width);
    }
    default: return ConstraintSet::nonneg_orthant(n);
  }
}

Outcome operator_properties() {
  const auto start = Clock::now();
  RandomSource rng(2024);
  const int trials = 10000;
  int grad_viol = 0, contraction_viol = 0, firm_viol = 0;
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const std::size_t n = 1 + rng.uniform_index(6);
    const LossComponent f = random_component(rng, n);
    const Vector x = 3.0 * rng.normal_vector(n);
    const Vector y = 3.0 * rng.normal_vector(n);
    const double mu = std::exp(rng.uniform(std::log(1e-3), std::log(1e2)));

    const double gap1 = f.moreau_gradient(x, mu).norm() - f.gradient(x).norm();
    worst = std::max(worst, gap1);
    if (gap1 > 1e-9) ++grad_viol;

    const double gap2 =
        (f.prox(x, mu) - f.prox(y, mu)).norm() - (x - y).norm() / (1.0 + mu * f.strong_convexity());
    worst = std::max(worst, gap2);
    if (gap2 > 1e-9) ++contraction_viol;

    const ConstraintSet s = random_set(rng, n);
    const Vector z = s.project(3.0 * rng.normal_vector(n));
    const Vector px = s.project(x);
    const double gap3 = (x - px).squaredNorm() - ((x - z).squaredNorm() - (z - px).squaredNorm());
    worst = std::max(worst, gap3);
    if (gap3 > 1e-9) ++firm_viol;
  }
  const double secs = seconds_since(start);
  Outcome o;
  o.pass = grad_viol == 0 && contraction_viol == 0 && firm_viol == 0 && secs < 10.0;
  o.detail = std::to_string(trials) + " triples; violations: gradient " + std::to_string(grad_viol) +
             ", contraction " + std::to_string(contraction_viol) + ", projection " +
             std::to_string(firm_viol) + "; worst excess " + num(worst) + "; " + num(secs, 3) + " s";
  return o;
}

// ---------------------------------------------------------------------------
// Independent prox oracles.

// Fine grid then golden-section refinement of a unimodal 1-D function.
double grid_golden_min(const std::function<double(double)>& f, double lo, double hi) {
  const int cells = 2000;
  double best_t = lo, best_v = f(lo);
  for (int i = 1; i <= cells; ++i) {
    const double t = lo + (hi - lo) * i / cells;
    const double v = f(t);
    if (v < best_v) {
      best_v = v;
      best_t = t;
    }
  }
  const double h = (hi - lo) / cells;
  double a = best_t - h, b = best_t + h;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 120; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

Outcome prox_correctness() {
  const auto start = Clock::now();
  RandomSource rng(77);
  const int instances = 1000;
  int failures_here = 0;
  double worst = 0.0;
  for (int t = 0; t < instances; ++t) {
    const std::size_t n = 1 + rng.uniform_index(5);
    const auto N = static_cast<Eigen::Index>(n);
    const Vector x = 3.0 * rng.normal_vector(n);
    const double mu = std::exp(rng.uniform(std::log(1e-2), std::log(1e1)));
    Vector expected;
    Vector got;
    switch (t % 6) {
      case 0: {
        const double lambda = rng.uniform(0.0, 3.0);
        const Vector c = rng.normal_vector(n);
        // (lambda I + I/mu) z = lambda c + x/mu
        expected = (lambda * c + x / mu) / (lambda + 1.0 / mu);
        got = LossComponent::quadratic_norm(lambda, c).prox(x, mu);
        break;
      }
      case 1: {
        const Vector a = rng.normal_vector(n);
        const double b = rng.normal();
        const Matrix M = 2.0 * a * a.transpose() + Matrix::Identity(N, N) / mu;
        expected = M.fullPivLu().solve(2.0 * b * a + x / mu);
        got = LossComponent::linear_residual(a, b).prox(x, mu);
        break;
      }
      case 2: {
        const std::size_t rows = 1 + rng.uniform_index(2 * n);
        Matrix A(static_cast<Eigen::Index>(rows), N);
        for (Eigen::Index i = 0; i < A.rows(); ++i) A.row(i) = rng.normal_vector(n).transpose();
        const Vector b = rng.normal_vector(rows);
        const Matrix M = 2.0 * A.transpose() * A + Matrix::Identity(N, N) / mu;
        expected = M.fullPivLu().solve(2.0 * A.transpose() * b + x / mu);
        got = LossComponent::batch_least_squares(A, b).prox(x, mu);
        break;
      }
      default: {
        const Vector a = rng.normal_vector(n);
        const ScalarLoss loss = t % 6 == 3   ? logistic(rng.uniform() < 0.5 ? -1.0 : 1.0)
                                : t % 6 == 4 ? hinge(rng.uniform() < 0.5 ? -1.0 : 1.0)
                                             : squared_error(rng.normal());
        // The minimizer moves along a: z = x + s a; minimize the 1-D restriction.
        const double aa = a.squaredNorm();
        const auto phi = [&](double s) {
          return loss.value(a.dot(x) + s * aa) + s * s * aa / (2.0 * mu);
        };
        const double bound = 2.0 * mu * (1.0 + std::abs(a.dot(x)) + 10.0) + 10.0;
        const double s = grid_golden_min(phi, -bound, bound);
        expected = x + s * a;
        got = LossComponent::composed_scalar(a, loss).prox(x, mu);
        break;
      }
    }
    const double err = (got - expected).norm();
    worst = std::max(worst, err);
    if (!(err <= 1e-6)) ++failures_here;
  }
  const double secs = seconds_since(start);
  Outcome o;
  o.pass = failures_here == 0 && secs < 30.0;
  o.detail = std::to_string(instances) + " instances; mismatches " + std::to_string(failures_here) +
             "; worst error " + num(worst) + "; " + num(secs, 3) + " s";
  return o;
}

Outcome deterministic_recursion() {
  const Vector c = to_vector(std::vector<double>{1.5, -0.5, 2.0, 0.0});
  const Vector x0 = to_vector(std::vector<double>{-3.0, 4.0, 0.5, 10.0});
  ProblemData data;
  data.n = 4;
  data.losses = {LossComponent::quadratic_norm(1.0, c)};
  data.optimum = c;
  const StochasticProblem p(data);
  double worst = 0.0;
  for (double mu : {0.1, 0.5, 1.0, 3.0}) {
    SolverConfig cfg;
    cfg.algorithm = Algorithm::SPP;
    cfg.schedule = StepsizeSchedule::constant(mu);
    cfg.iterations = 100;
    cfg.x0 = x0;
    cfg.keep_iterates = true;
    const RunTrace t = run_solver(p, cfg);
    for (const auto& r : t.records) {
      const Vector expected = c + (x0 - c) / std::pow(1.0 + mu, static_cast<double>(r.k));
      worst = std::max(worst, (r.iterate - expected).cwiseAbs().maxCoeff());
    }
  }
  Outcome o;
  o.pass = worst <= 1e-12;
  o.detail = "max deviation over k <= 100, four stepsizes: " + num(worst);
  return o;
}

// ---------------------------------------------------------------------------
// Shared desk-scale least-squares runs.

struct DeskRuns {
  StochasticProblem problem;
  ExperimentResult result;
  double seconds = 0.0;
};

ExperimentConfig desk_config() {
  ExperimentConfig c;
  c.name = "desk";
  c.generator.family = Family::ConstrainedLs;
  c.generator.n = 20;
  c.generator.m = 2000;
  c.runs = 30;
  c.stride = 15;
  c.kappa_probes = 200;
  c.overlays = true;
  return c;
}

DeskRuns run_desk() {
  DeskRuns d;
  ExperimentConfig c = desk_config();
  c.algorithms = {Algorithm::SPP};
  c.mu0 = {2.0};
  c.gamma = {0.0, 0.25, 0.5, 0.75, 1.0};
  d.problem = build_problem(c);
  RunOptions opt;
  opt.write_outputs = false;
  const auto start = Clock::now();
  d.result = run_experiment(c, d.problem, opt);
  d.seconds = seconds_since(start);
  return d;
}

Outcome rate_law(const DeskRuns& d) {
  const AggregateTrace& g1 = find_cell(d.result, Algorithm::SPP, 1.0);
  const AggregateTrace& gh = find_cell(d.result, Algorithm::SPP, 0.5);
  const double s1 = loglog_slope(column_k(g1), column_sq(g1));
  const double sh = loglog_slope(column_k(gh), column_sq(gh));
  // Two of the five cells are the rate-law runs.
  const double secs = d.seconds * 2.0 / static_cast<double>(d.result.cells.size());
  Outcome o;
  o.pass = std::abs(s1 + 1.0) <= 0.35 && std::abs(sh + 0.5) <= 0.25 && secs < 300.0;
  o.detail = "slope gamma=1: " + num(s1) + " (target -1 +- 0.35), gamma=1/2: " + num(sh) +
             " (target -0.5 +- 0.25); m=2000, n=20, " + std::to_string(d.problem.loss_count()) +
             " components, 30 runs, one pass, mu0=2; " + num(secs, 3) + " s";
  return o;
}

Outcome exponent_ordering(const DeskRuns& d) {
  const double gammas[4] = {1.0, 0.75, 0.5, 0.25};
  double err[4], se[4];
  for (int i = 0; i < 4; ++i) {
    const AggregateTrace& t = find_cell(d.result, Algorithm::SPP, gammas[i]);
    err[i] = t.rows.back().mean_sqdist;
    se[i] = t.rows.back().se_sqdist;
  }
  const bool ordered = err[0] <= err[1] && err[1] <= err[2] && err[2] <= err[3];
  const double separation = (err[3] - err[0]) / std::sqrt(se[0] * se[0] + se[3] * se[3]);
  Outcome o;
  o.pass = ordered && separation >= 2.0;
  o.detail = "end-of-pass error gamma=1: " + num(err[0]) + ", 3/4: " + num(err[1]) + ", 1/2: " +
             num(err[2]) + ", 1/4: " + num(err[3]) + "; extremes separated by " + num(separation, 3) +
             " standard errors";
  return o;
}

Outcome bound_dominance(const DeskRuns& d) {
  std::string detail = "kappa_hat=" + (d.result.kappa_hat ? num(*d.result.kappa_hat) : std::string("n/a"));
  bool pass = true;
  for (double gamma : {0.0, 0.5, 1.0}) {
    const AggregateTrace& t = find_cell(d.result, Algorithm::SPP, gamma);
    const std::string label = gamma == 0.0 ? "constant mu" : "gamma=" + num(gamma);
    if (t.bound.size() != t.rows.size()) {
      pass = false;
      detail += "; " + label + ": no bound (" + t.bound_note + ")";
      continue;
    }
    std::size_t violations = 0;
    double tightest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const double limit = t.bound[i] + 3.0 * t.rows[i].se_sqdist;
      if (!(t.rows[i].mean_sqdist <= limit)) ++violations;
      tightest = std::min(tightest, limit / t.rows[i].mean_sqdist);
    }
    pass = pass && violations == 0;
    detail += "; " + label + ": " + std::to_string(violations) + " violations over " +
              std::to_string(t.rows.size()) + " records, min bound/error " + num(tightest);
  }
  Outcome o;
  o.pass = pass;
  o.detail = detail;
  return o;
}

Outcome feasibility_decay(const DeskRuns& d) {
  const AggregateTrace& t = find_cell(d.result, Algorithm::SPP, 1.0);
  const std::uint64_t K = t.rows.back().k;
  const AggregateRow* tenth = nullptr;
  for (const auto& r : t.rows) {
    if (r.k == K / 10) tenth = &r;
  }
  if (!tenth) return {false, "k = K/10 was not recorded"};
  const double ratio = tenth->mean_feas / t.rows.back().mean_feas;
  Outcome o;
  o.pass = ratio >= 3.0;
  o.detail = "mean dist^2 at k=" + std::to_string(tenth->k) + ": " + num(tenth->mean_feas) + ", at k=" +
             std::to_string(K) + ": " + num(t.rows.back().mean_feas) + "; ratio " + num(ratio) +
             " (gamma=1, mu0=2, 30 runs)";
  return o;
}

Outcome robustness_contrast() {
  ExperimentConfig c = desk_config();
  c.algorithms = {Algorithm::SPP, Algorithm::SGD};
  c.mu0 = {1.0};
  c.gamma = {0.5};
  c.overlays = false;
  const StochasticProblem p = build_problem(c);
  RunOptions opt;
  opt.write_outputs = false;
  const ExperimentResult r = run_experiment(c, p, opt);
  const AggregateTrace& spp = find_cell(r, Algorithm::SPP, 0.5);
  const AggregateTrace& sgd = find_cell(r, Algorithm::SGD, 0.5);
  double peak_spp = 0.0, peak_sgd = 0.0;
  for (const auto& row : spp.rows) peak_spp = std::max(peak_spp, row.mean_sqdist);
  for (const auto& row : sgd.rows) peak_sgd = std::max(peak_sgd, row.mean_sqdist);

  const ProblemConstants pc = measure_constants(p, p.initial_point(), 1.0, 1.0, 0.5);
  const double cap = boundedness_cap(pc);
  std::size_t cap_violations = 0;
  for (const auto& row : spp.rows) {
    const double root = std::sqrt(row.mean_sqdist);
    const double se_root = root > 0.0 ? row.se_sqdist / (2.0 * root) : 0.0;
    if (!(root <= cap + 3.0 * se_root)) ++cap_violations;
  }
  const double ratio = peak_sgd / peak_spp;
  Outcome o;
  o.pass = ratio >= 10.0 && cap_violations == 0;
  o.detail = "peak mean error SGD " + num(peak_sgd) + " vs SPP " + num(peak_spp) + " (ratio " + num(ratio) +
             ", SGD diverged runs " + std::to_string(sgd.diverged) + "); boundedness cap " + num(cap) +
             ", violations " + std::to_string(cap_violations) + "/" + std::to_string(spp.rows.size());
  return o;
}

// ---------------------------------------------------------------------------

Outcome noise_floor() {
  GeneratorSpec g;
  g.family = Family::Feasibility;
  g.n = 20;
  g.m = 20;
  g.constraints = 10;
  g.lambda = 1.0;
  const StochasticProblem p = generate(g).problem;
  const ProblemConstants pc = measure_constants(p, p.initial_point(), 1.0, 0.01, 0.0);

  const double mus[2] = {0.01, 0.005};
  double plateau[2];
  double radius_sq[2];
  const std::uint64_t iterations = 40000;
  for (int i = 0; i < 2; ++i) {
    ExperimentConfig c;
    c.name = "floor";
    c.generator = g;
    c.algorithms = {Algorithm::SPP};
    c.mu0 = {mus[i]};
    c.gamma = {0.0};
    c.runs = 30;
    c.iterations = iterations;
    c.stride = 400;
    c.overlays = false;
    RunOptions opt;
    opt.write_outputs = false;
    const ExperimentResult r = run_experiment(c, p, opt);
    const AggregateTrace& t = r.cells.at(0);
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& row : t.rows) {
      if (row.k >= iterations / 2) {
        sum += row.mean_sqdist;
        ++count;
      }
    }
    plateau[i] = sum / static_cast<double>(count);
    const double radius = constant_step_envelope(pc, mus[i], iterations).radius;
    radius_sq[i] = radius * radius;
  }
  const double ratio = plateau[0] / plateau[1];
  Outcome o;
  o.pass = plateau[0] <= 2.0 * radius_sq[0] && plateau[1] <= 2.0 * radius_sq[1] && ratio >= 2.0 &&
           ratio <= 8.0;
  o.detail = "least-norm feasibility n=20, 10 halfspaces, 30 runs, 40000 iterations; plateau mu=0.01: " +
             num(plateau[0]) + " (2 radius^2 = " + num(2.0 * radius_sq[0]) + "), mu=0.005: " +
             num(plateau[1]) + " (2 radius^2 = " + num(2.0 * radius_sq[1]) + "); halving ratio " + num(ratio);
  return o;
}

Outcome rspp_arithmetic() {
  ProblemData data;
  data.n = 2;
  data.losses = {LossComponent::quadratic_norm(1.0, Vector::Ones(2))};
  const StochasticProblem p(data);
  const double mu0 = 0.8;
  std::size_t mismatches = 0;
  std::string detail;
  for (double gamma : {0.5, 1.0, 2.0}) {
    SolverConfig cfg;
    cfg.algorithm = Algorithm::RSPP;
    cfg.schedule = StepsizeSchedule::poly_decay(mu0, gamma);
    cfg.epochs = 50;
    cfg.stride = 1000000;
    std::vector<double> steps;
    cfg.observer = [&](const IterationEvent& e) { steps.push_back(e.stepsize); };
    const RunTrace t = run_solver(p, cfg);
    if (t.epochs.size() != 50) ++mismatches;
    std::uint64_t total = 0;
    std::size_t pos = 0;
    for (const Epoch& ep : t.epochs) {
      const double td = static_cast<double>(ep.index);
      const double mu = mu0 / std::pow(td, gamma);
      const auto len = static_cast<std::uint64_t>(std::llround(std::ceil(std::pow(td, gamma) - 1e-9)));
      if (ep.stepsize != mu || ep.length != len) ++mismatches;
      for (std::uint64_t j = 0; j < ep.length; ++j, ++pos) {
        if (pos >= steps.size() || steps[pos] != mu) ++mismatches;
      }
      total += ep.length;
      if (static_cast<double>(total) < std::pow(td, 1.0 + gamma) / (1.0 + gamma)) ++mismatches;
    }
    if (pos != steps.size()) ++mismatches;
    detail += "gamma=" + num(gamma) + ": sum K_t=" + std::to_string(total) + "; ";
  }

  // rspp_plan on measured constants of a well-conditioned finite-sum instance.
  GeneratorSpec spec;
  spec.family = Family::FiniteSum;
  spec.n = 10;
  spec.m = 100;
  spec.constraints = 5;
  spec.seed = 3;
  const StochasticProblem fs_problem = generate(spec).problem;
  RandomSource rng(17);
  const double kappa = estimate_kappa(fs_problem, 2000, rng).kappa;
  detail += "finite-sum kappa_hat=" + num(kappa) + "; ";
  std::size_t non_monotone = 0;
  for (double gamma : {0.5, 1.0, 2.0}) {
    const ProblemConstants c = measure_constants(fs_problem, fs_problem.initial_point(), kappa, 2.0, gamma);
    std::uint64_t prev = 0;
    std::string plan;
    for (double eps : {10.0, 3.0, 1.0, 0.3, 0.1, 0.03, 0.01}) {
      const std::uint64_t T = rspp_plan(eps, gamma, c).epochs;
      if (T < prev) ++non_monotone;
      prev = T;
      plan += std::to_string(T) + " ";
    }
    detail += "plan T(gamma=" + num(gamma) + ") for eps 10..0.01: " + plan + "; ";
  }
  Outcome o;
  o.pass = mismatches == 0 && non_monotone == 0;
  o.detail = detail + "schedule mismatches " + std::to_string(mismatches) + ", non-monotone plans " +
             std::to_string(non_monotone);
  return o;
}

Outcome markowitz_pipeline() {
  const fs::path dir = fs::temp_directory_path() / "spp_acceptance_markowitz";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path csv = dir / "returns.csv";
  write_returns_csv(synthetic_returns(1276, 25, 11), csv.string());

  ExperimentConfig c = parse_config(config_template(Family::Markowitz));
  c.returns_csv = csv.string();
  c.algorithms = {Algorithm::SPP};
  c.mu0 = {1.0};
  c.gamma = {1.0};
  c.output_dir = (dir / "out").string();
  const StochasticProblem p = build_problem(c);
  const std::uint64_t pass_length = p.loss_count();
  const std::uint64_t passes = 8;
  c.iterations = passes * pass_length;
  c.stride = pass_length;
  const ExperimentResult r = run_experiment(c, p);

  bool outputs = true;
  for (const auto& f : r.files) outputs = outputs && fs::exists(f) && fs::file_size(f) > 0;
  const AggregateTrace& t = r.cells.at(0);
  const std::vector<AggregateRow> parsed = parse_aggregate_csv(read_file(dir / "out" / (t.cell.id() + ".csv")));
  outputs = outputs && parsed.size() == passes + 1 && t.plotted == "test_objective";

  std::size_t increases = 0;
  std::string trail;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    trail += num(t.rows[i].mean_obj) + (i + 1 < t.rows.size() ? " " : "");
    if (i == 0) continue;
    const double slack = 2.0 * std::sqrt(t.rows[i].se_obj * t.rows[i].se_obj +
                                         t.rows[i - 1].se_obj * t.rows[i - 1].se_obj);
    if (t.rows[i].mean_obj > t.rows[i - 1].mean_obj + slack) ++increases;
  }

  // Membership of every iterate in the set it was just projected onto.
  std::size_t outside = 0;
  std::uint64_t checked = 0;
  for (std::uint64_t seed = 0; seed < c.runs; ++seed) {
    SolverConfig sc;
    sc.algorithm = Algorithm::SPP;
    sc.schedule = StepsizeSchedule::poly_decay(1.0, 1.0);
    sc.iterations = c.iterations;
    sc.stride = c.iterations;
    sc.seed = c.base_seed + seed;
    sc.observer = [&](const IterationEvent& e) {
      ++checked;
      if (!p.set(e.draw.set_index).contains(e.next, 1e-12)) ++outside;
    };
    run_solver(p, sc);
  }
  fs::remove_all(dir);

  Outcome o;
  o.pass = outputs && increases == 0 && outside == 0;
  o.detail = "1276x25 synthetic returns via CSV, " + std::to_string(p.loss_count()) + " training rows; " +
             std::to_string(r.files.size()) + " files written; F_test per pass (" + std::to_string(passes) +
             " passes, 30 runs): " + trail + "; increases beyond 2 SE: " + std::to_string(increases) +
             "; iterates outside sampled set: " + std::to_string(outside) + "/" + std::to_string(checked);
  return o;
}

Outcome reproducibility() {
  const fs::path a = fs::temp_directory_path() / "spp_acceptance_serial";
  const fs::path b = fs::temp_directory_path() / "spp_acceptance_parallel";
  fs::remove_all(a);
  fs::remove_all(b);
  ExperimentConfig c = desk_config();
  c.algorithms = {Algorithm::SPP, Algorithm::ASPP, Algorithm::RSPP, Algorithm::SGD};
  c.mu0 = {1.0};
  c.gamma = {0.5};
  c.runs = 6;
  c.stride = 50;
  c.overlays = false;
  const StochasticProblem p = build_problem(c);
  c.output_dir = a.string();
  RunOptions serial;
  serial.workers = 1;
  run_experiment(c, p, serial);
  c.output_dir = b.string();
  RunOptions parallel;
  parallel.workers = 4;
  run_experiment(c, p, parallel);
  std::size_t compared = 0, differ = 0;
  for (const auto& cell : c.cells()) {
    const std::string name = cell.id() + ".csv";
    ++compared;
    if (read_file(a / name) != read_file(b / name) || read_file(a / name).empty()) ++differ;
  }
  fs::remove_all(a);
  fs::remove_all(b);
  Outcome o;
  o.pass = differ == 0 && compared == 4;
  o.detail = std::to_string(compared) + " cell CSVs compared between 1 and 4 workers; differing: " +
             std::to_string(differ);
  return o;
}

}  // namespace

int main() {
  const auto start = Clock::now();
  run_criterion(1, "operator properties", operator_properties);
  run_criterion(2, "prox correctness", prox_correctness);
  run_criterion(3, "deterministic SPP recursion", deterministic_recursion);

  DeskRuns desk;
  bool desk_ok = true;
  std::string desk_error;
  try {
    desk = run_desk();
  } catch (const std::exception& e) {
    desk_ok = false;
    desk_error = e.what();
  }
  const auto with_desk = [&](const std::function<Outcome(const DeskRuns&)>& body) {
    return [&, body]() -> Outcome {
      if (!desk_ok) return {false, "desk-scale runs failed: " + desk_error};
      return body(desk);
    };
  };
  run_criterion(4, "rate law", with_desk(rate_law));
  run_criterion(5, "exponent ordering", with_desk(exponent_ordering));
  run_criterion(6, "bound dominance", with_desk(bound_dominance));
  run_criterion(7, "noise floor", noise_floor);
  run_criterion(8, "RSPP schedule arithmetic", rspp_arithmetic);
  run_criterion(9, "robustness contrast", robustness_contrast);
  run_criterion(10, "feasibility decay", with_desk(feasibility_decay));
  run_criterion(11, "Markowitz pipeline", markowitz_pipeline);
  run_criterion(12, "reproducibility", reproducibility);

  std::printf("%d of 12 criteria failed; total %.1f s\n", failures, seconds_since(start));
  return failures == 0 ? 0 : 1;
}
