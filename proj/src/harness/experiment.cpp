#include "spp/harness.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

namespace spp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

// Mean and standard error of the sample, in index order. Any infinite entry
// makes the mean infinite and the error undefined.
Moments moments(const std::vector<double>& values) {
  Moments m;
  if (values.empty()) return {kNaN, kNaN};
  double sum = 0.0;
  double lo = kInf;
  double hi = -kInf;
  for (double v : values) {
    if (std::isinf(v)) return {kInf, kNaN};
    sum += v;
    lo = std::fmin(lo, v);
    hi = std::fmax(hi, v);
  }
  const double n = static_cast<double>(values.size());
  m.mean = lo <= hi ? std::clamp(sum / n, lo, hi) : sum / n;
  if (values.size() < 2) return m;
  double ss = 0.0;
  for (double v : values) ss += (v - m.mean) * (v - m.mean);
  m.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return m;
}

std::string plotted_metric(const StochasticProblem& problem) {
  if (problem.has_test_objective()) return "test_objective";
  if (problem.optimum()) return "sqdist";
  return "objective";
}

std::string number_label(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

// Bound overlay for an SPP cell, evaluated at every recorded k.
void attach_bound(AggregateTrace& trace, const StochasticProblem& problem,
                  const std::optional<double>& kappa_hat) {
  const CellSpec& cell = trace.cell;
  if (cell.algorithm != Algorithm::SPP) return;
  if (trace.plotted != "sqdist") {
    trace.bound_note = "no distance bound applies to the plotted metric";
    return;
  }
  if (cell.gamma > 1.0) {
    trace.bound_note = "no per-iteration bound for gamma > 1";
    return;
  }
  try {
    const double kappa = kappa_hat.value_or(1.0);
    const ProblemConstants c =
        measure_constants(problem, problem.initial_point(), kappa, cell.mu0, cell.gamma);
    std::vector<double> bound;
    bound.reserve(trace.rows.size());
    for (const AggregateRow& row : trace.rows) {
      if (cell.gamma == 0.0) {
        bound.push_back(constant_step_envelope(c, cell.mu0, row.k).value);
      } else if (row.k == 0) {
        bound.push_back((problem.initial_point() - *problem.optimum()).squaredNorm());
      } else {
        bound.push_back(strongly_convex_bound(c, row.k, cell.gamma));
      }
    }
    trace.bound = std::move(bound);
    trace.bound_name = cell.gamma == 0.0 ? "constant-step envelope" : "decaying-step bound";
  } catch (const std::exception& e) {
    trace.bound.clear();
    trace.bound_note = e.what();
  }
}

nlohmann::json constants_json(const ProblemConstants& c) {
  nlohmann::json j;
  auto put = [&](const char* key, const std::optional<double>& v) {
    j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  put("r0", c.r0);
  put("kappa_hat_lower_bound", c.kappa);
  put("mean_sq_lipschitz", c.mean_sq_lipschitz);
  put("eta_sq", c.eta_sq);
  put("dist_x0", c.dist_x0);
  put("grad_F_norm", c.grad_F_norm);
  double sigma_mean = 0.0;
  for (std::size_t i = 0; i < c.sigmas.size(); ++i) {
    sigma_mean += c.sigmas[i] * (c.weights.empty() ? 1.0 / static_cast<double>(c.sigmas.size())
                                                   : c.weights[i]);
  }
  j["sigma_mean"] = sigma_mean;
  return j;
}

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

AggregateTrace aggregate(const CellSpec& cell, const std::vector<RunTrace>& runs,
                         bool use_test_objective) {
  AggregateTrace trace;
  trace.cell = cell;
  trace.runs = runs.size();
  const RunTrace* longest = nullptr;
  for (const RunTrace& run : runs) {
    if (run.diverged) ++trace.diverged;
    if (!longest || run.records.size() > longest->records.size()) longest = &run;
  }
  if (!longest) return trace;
  const std::size_t rows = longest->records.size();
  for (const RunTrace& run : runs) {
    for (std::size_t i = 0; i < run.records.size(); ++i) {
      if (run.records[i].k != longest->records[i].k) {
        throw std::invalid_argument("aggregate: runs do not share a record grid");
      }
    }
    if (run.records.size() < rows && !run.diverged) {
      throw std::invalid_argument("aggregate: a run that did not diverge has missing records");
    }
  }

  std::vector<double> sq(runs.size());
  std::vector<double> fe(runs.size());
  std::vector<double> ob(runs.size());
  trace.rows.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t r = 0; r < runs.size(); ++r) {
      if (i < runs[r].records.size()) {
        const Metrics& m = runs[r].records[i].metrics;
        sq[r] = m.sqdist;
        fe[r] = m.feasibility;
        ob[r] = use_test_objective ? m.test_objective : m.objective;
      } else {
        sq[r] = fe[r] = ob[r] = kInf;
      }
    }
    AggregateRow row;
    row.k = longest->records[i].k;
    row.stepsize = longest->records[i].stepsize;
    const Moments a = moments(sq);
    const Moments b = moments(fe);
    const Moments c = moments(ob);
    row.mean_sqdist = a.mean;
    row.se_sqdist = a.se;
    row.mean_feas = b.mean;
    row.se_feas = b.se;
    row.mean_obj = c.mean;
    row.se_obj = c.se;
    trace.rows.push_back(row);
  }
  return trace;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  return run_experiment(config, build_problem(config), options);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const StochasticProblem& problem,
                                const RunOptions& options) {
  config.validate();
  const std::vector<CellSpec> cells = config.cells();
  const std::uint64_t iterations = config.iterations > 0 ? config.iterations : problem.loss_count();
  const std::uint64_t stride =
      config.stride > 0 ? config.stride : std::max<std::uint64_t>(1, iterations / 100);
  const bool use_test = problem.has_test_objective();

  std::size_t workers = options.workers > 0 ? options.workers : config.workers;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t tasks = cells.size() * config.runs;
  workers = std::min(workers, tasks);

  std::vector<RunTrace> traces(tasks);
  std::vector<double> seconds(tasks, 0.0);
  std::vector<std::exception_ptr> errors(tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks) return;
      const CellSpec& cell = cells[t / config.runs];
      const std::size_t run = t % config.runs;
      SolverConfig sc;
      sc.algorithm = cell.algorithm;
      sc.schedule = cell.schedule();
      sc.iterations = iterations;
      sc.epochs = cell.algorithm == Algorithm::RSPP ? rspp_epochs_for_budget(iterations, cell.gamma) : 1;
      sc.seed = config.base_seed + run;
      sc.stride = stride;
      sc.feasibility_tol = config.feasibility_tol;
      const auto start = std::chrono::steady_clock::now();
      try {
        traces[t] = run_solver(problem, sc);
      } catch (...) {
        errors[t] = std::current_exception();
      }
      seconds[t] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ExperimentResult result;
  result.kappa_hat = problem.kappa_override();
  const bool want_bounds =
      config.overlays && problem.optimum() && !use_test &&
      std::any_of(cells.begin(), cells.end(),
                  [](const CellSpec& c) { return c.algorithm == Algorithm::SPP && c.gamma <= 1.0; });
  if (want_bounds && !result.kappa_hat && problem.set_count() > 0 && config.kappa_probes > 0) {
    RandomSource rng(config.base_seed);
    try {
      result.kappa_hat = estimate_kappa(problem, config.kappa_probes, rng).kappa;
    } catch (const std::exception&) {
      result.kappa_hat.reset();
    }
  }
  if (want_bounds && !result.kappa_hat && problem.set_count() == 0) result.kappa_hat = 1.0;

  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const auto first = traces.begin() + static_cast<std::ptrdiff_t>(ci * config.runs);
    std::vector<RunTrace> runs(first, first + static_cast<std::ptrdiff_t>(config.runs));
    AggregateTrace trace = aggregate(cells[ci], runs, use_test);
    trace.plotted = plotted_metric(problem);
    for (std::size_t r = 0; r < config.runs; ++r) trace.wall_seconds += seconds[ci * config.runs + r];
    if (config.overlays && result.kappa_hat) attach_bound(trace, problem, result.kappa_hat);
    result.cells.push_back(std::move(trace));
  }
  if (want_bounds && result.kappa_hat && problem.optimum()) {
    try {
      result.constants = measure_constants(problem, problem.initial_point(), *result.kappa_hat,
                                           cells.front().mu0, cells.front().gamma);
    } catch (const std::exception&) {
      result.constants.reset();
    }
  }

  if (!options.write_outputs) return result;

  const char* env = std::getenv(kOutputDirEnv);
  const std::filesystem::path dir = env && *env ? std::filesystem::path(env)
                                                : std::filesystem::path(config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());

  nlohmann::json meta;
  meta["name"] = config.name;
  meta["family"] = problem.family();
  meta["dimension"] = problem.dimension();
  meta["loss_components"] = problem.loss_count();
  meta["constraint_sets"] = problem.set_count();
  meta["coupling"] = to_string(problem.coupling());
  meta["runs"] = config.runs;
  meta["base_seed"] = config.base_seed;
  meta["iterations"] = iterations;
  meta["stride"] = stride;
  meta["objective_column"] = use_test ? "test objective" : "objective";
  meta["kappa_hat_lower_bound"] =
      result.kappa_hat ? nlohmann::json(*result.kappa_hat) : nlohmann::json(nullptr);
  if (result.constants) meta["constants"] = constants_json(*result.constants);
  meta["caveats"] = {
      "kappa_hat is a sampled estimate and only certifies a lower bound on the regularity constant",
      "bounded-subgradient constants of least-squares losses hold on bounded sets; overlays treat "
      "them as valid over the observed iterate region"};

  std::map<double, std::vector<AggregateTrace>> groups;
  for (const AggregateTrace& trace : result.cells) {
    const std::string csv = (dir / (trace.cell.id() + ".csv")).string();
    emit_csv(trace, csv);
    result.files.push_back(csv);
    groups[trace.cell.gamma].push_back(trace);

    nlohmann::json cj;
    cj["id"] = trace.cell.id();
    cj["algorithm"] = to_string(trace.cell.algorithm);
    cj["mu0"] = trace.cell.mu0;
    cj["gamma"] = trace.cell.gamma;
    cj["runs"] = trace.runs;
    cj["diverged"] = trace.diverged;
    cj["plotted"] = trace.plotted;
    cj["csv"] = trace.cell.id() + ".csv";
    cj["wall_seconds"] = trace.wall_seconds;
    if (!trace.bound.empty()) cj["bound"] = trace.bound_name;
    if (!trace.bound_note.empty()) cj["bound_note"] = trace.bound_note;
    if (problem.mean_strong_convexity() > 0.0) {
      cj["theta0"] = finite_or_null(theta0(problem, trace.cell.mu0));
    }
    meta["cells"].push_back(cj);
  }
  if (config.per_run_csv) {
    for (std::size_t t = 0; t < tasks; ++t) {
      const CellSpec& cell = cells[t / config.runs];
      const std::string path =
          (dir / (cell.id() + "_run-" + std::to_string(t % config.runs) + ".csv")).string();
      emit_run_csv(traces[t], use_test, path);
      result.files.push_back(path);
    }
  }
  for (const auto& [gamma, group] : groups) {
    const std::string stem = config.name + "_gamma-" + number_label(gamma);
    const std::string title = config.name + (gamma == 0.0 ? ", constant stepsize"
                                                          : ", gamma = " + number_label(gamma));
    const std::string svg = (dir / (stem + ".svg")).string();
    emit_svg(make_plot(group, title), svg);
    result.files.push_back(svg);
    meta["figures"].push_back(stem + ".svg");
  }
  const std::string meta_path = (dir / "metadata.json").string();
  write_text(meta_path, meta.dump(2) + "\n");
  result.files.push_back(meta_path);
  return result;
}

}  // namespace spp
