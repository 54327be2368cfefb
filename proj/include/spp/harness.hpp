// Experiment configuration, Monte-Carlo orchestration, aggregation and
// CSV/SVG/JSON emission.
#pragma once

#include "spp/bounds.hpp"
#include "spp/problems.hpp"
#include "spp/solvers.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace spp {

/// Malformed or invalid experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One grid cell: an algorithm at (mu0, gamma). gamma = 0 is a constant step.
struct CellSpec {
  Algorithm algorithm = Algorithm::SPP;
  double mu0 = 1.0;
  double gamma = 1.0;

  StepsizeSchedule schedule() const;
  /// File-system friendly identifier, e.g. "spp_mu0-0.5_gamma-1".
  std::string id() const;
  /// Human readable label, e.g. "SPP mu0=0.5".
  std::string label() const;
};

struct ExperimentConfig {
  std::string name = "experiment";
  GeneratorSpec generator;
  /// Markowitz only: returns table to load instead of synthetic returns.
  std::string returns_csv;
  MarkowitzOptions markowitz;

  std::vector<Algorithm> algorithms{Algorithm::SPP};
  std::vector<double> mu0{1.0};
  std::vector<double> gamma{1.0};

  std::size_t runs = 30;
  std::uint64_t base_seed = 1;
  std::string output_dir = "out";
  bool overlays = true;
  std::size_t kappa_probes = 200;
  /// Inner iteration budget; 0 means one pass (the number of loss components).
  std::uint64_t iterations = 0;
  /// Record stride; 0 picks about 100 records per run.
  std::uint64_t stride = 0;
  /// Worker threads; 0 means the available hardware parallelism.
  std::size_t workers = 0;
  /// Also write one CSV per run (debugging and aggregation checks).
  bool per_run_csv = false;
  double feasibility_tol = 1e-10;

  std::vector<CellSpec> cells() const;
  /// Throws ConfigError on an invalid grid or counts.
  void validate() const;
};

/// Parses the INI-style grammar documented in config_template(). Unknown
/// sections or keys are errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// A documented configuration with defaults for the given family.
std::string config_template(Family family);
/// Environment variable that overrides ExperimentConfig::output_dir.
inline constexpr const char* kOutputDirEnv = "SPP_OUTPUT_DIR";

/// Builds the problem an experiment runs on.
StochasticProblem build_problem(const ExperimentConfig& config);

struct AggregateRow {
  std::uint64_t k = 0;
  double mean_sqdist = 0.0;
  double se_sqdist = 0.0;
  double mean_feas = 0.0;
  double se_feas = 0.0;
  /// F_test when the problem carries a held-out objective, F otherwise.
  double mean_obj = 0.0;
  double se_obj = 0.0;
  double stepsize = 0.0;
};

struct AggregateTrace {
  CellSpec cell;
  std::vector<AggregateRow> rows;
  std::size_t runs = 0;
  std::size_t diverged = 0;
  /// Which metric the plot shows: "sqdist" or "test_objective".
  std::string plotted = "sqdist";
  /// Theoretical bound at each row's k (empty when no overlay applies).
  std::vector<double> bound;
  std::string bound_name;
  /// Why no overlay was drawn, if one was requested.
  std::string bound_note;
  double wall_seconds = 0.0;
};

/// Mean and standard error across runs at every recorded k. Runs must share
/// the record grid; a diverged run makes later means infinite.
AggregateTrace aggregate(const CellSpec& cell, const std::vector<RunTrace>& runs,
                         bool use_test_objective);

struct ExperimentResult {
  std::vector<AggregateTrace> cells;
  std::vector<std::string> files;
  std::optional<double> kappa_hat;
  std::optional<ProblemConstants> constants;
};

struct RunOptions {
  /// Overrides ExperimentConfig::workers when nonzero.
  std::size_t workers = 0;
  bool write_outputs = true;
};

/// Runs every cell with seeds base_seed + i, i < runs, and writes one CSV per
/// cell, one SVG per gamma group and a metadata.json.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});
/// Same, on a prebuilt problem.
ExperimentResult run_experiment(const ExperimentConfig& config, const StochasticProblem& problem,
                                const RunOptions& options = {});

/// Decimal with 17 significant digits; "nan", "inf" and "-inf" for non-finite values.
std::string format_number(double value);

std::string format_csv(const AggregateTrace& trace);
void emit_csv(const AggregateTrace& trace, const std::string& path);
/// One row per record of a single run, in the aggregate CSV layout (zero errors).
void emit_run_csv(const RunTrace& run, bool use_test_objective, const std::string& path);
/// Parses a file written by emit_csv.
std::vector<AggregateRow> parse_aggregate_csv(const std::string& text);

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
  /// Index into the palette; series sharing a color share an index.
  std::size_t color = 0;
};

struct SvgPlot {
  std::string title;
  std::string x_label = "iteration k";
  std::string y_label;
  std::vector<SvgSeries> series;
};

/// Self-contained SVG with a log-scaled y axis. Non-finite points are
/// dropped; nonpositive values are clamped to the smallest positive one.
std::string render_svg(const SvgPlot& plot);
void emit_svg(const SvgPlot& plot, const std::string& path);
/// One solid polyline per trace plus a dashed one per available overlay.
SvgPlot make_plot(const std::vector<AggregateTrace>& traces, const std::string& title);

/// OLS slope of (ln k, ln y) over k in [k_max / 10, k_max], skipping k = 0
/// and nonpositive y.
double loglog_slope(const std::vector<double>& k, const std::vector<double>& y);

}  // namespace spp
