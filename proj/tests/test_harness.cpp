#include "doctest.h"

#include "spp/harness.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

using namespace spp;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("spp_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

// Small, fast instance: least-norm feasibility in R^5 with 6 halfspaces.
ExperimentConfig tiny_config(const fs::path& out) {
  ExperimentConfig c;
  c.name = "tiny";
  c.generator.family = Family::Feasibility;
  c.generator.n = 5;
  c.generator.m = 6;
  c.runs = 3;
  c.iterations = 50;
  c.stride = 5;
  c.kappa_probes = 20;
  c.output_dir = out.string();
  c.workers = 1;
  return c;
}

AggregateTrace trace_with(std::vector<AggregateRow> rows) {
  AggregateTrace t;
  t.rows = std::move(rows);
  return t;
}

std::size_t count_elements(const boost::property_tree::ptree& node, const std::string& tag) {
  std::size_t n = 0;
  for (const auto& [key, child] : node) {
    if (key == tag) ++n;
    n += count_elements(child, tag);
  }
  return n;
}

std::vector<const boost::property_tree::ptree*> find_elements(const boost::property_tree::ptree& node,
                                                              const std::string& tag) {
  std::vector<const boost::property_tree::ptree*> out;
  for (const auto& [key, child] : node) {
    if (key == tag) out.push_back(&child);
    for (auto* p : find_elements(child, tag)) out.push_back(p);
  }
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SPPCTL_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(
      "[experiment]\nname = demo\nruns = 4  # comment\nseed = 9\n"
      "[problem]\nfamily = random-ls-polyhedron\nn = 6\nm = 40\nconstraints = 7\n"
      "[solvers]\nalgorithms = SPP, sgd\nmu0 = 0.5, 1\ngamma = 1\n");
  CHECK(c.name == "demo");
  CHECK(c.runs == 4);
  CHECK(c.base_seed == 9);
  CHECK(c.generator.family == Family::RandomLsPolyhedron);
  CHECK(c.generator.n == 6);
  CHECK(*c.generator.constraints == 7);
  CHECK(c.algorithms == std::vector<Algorithm>{Algorithm::SPP, Algorithm::SGD});
  CHECK(c.cells().size() == 4);
  CHECK(c.cells()[0].id() == "spp_mu0-0.5_gamma-1");
}

TEST_CASE("config errors fail fast") {
  CHECK_THROWS_AS(parse_config("[experiment]\nrunz = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[extra]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("runs = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[experiment]\nruns = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[experiment]\nruns = many\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[solvers]\nalgorithms = adam\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[solvers]\nmu0 = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[solvers]\nalgorithms = rspp\ngamma = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[problem]\nfamily = moon\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("templates parse back to their defaults") {
  for (Family f : {Family::ConstrainedLs, Family::RandomLsPolyhedron, Family::Markowitz,
                   Family::Feasibility, Family::FiniteSum}) {
    const ExperimentConfig c = parse_config(config_template(f));
    CHECK(c.generator.family == f);
    CHECK(c.runs == 30);
    CHECK(c.cells().size() == 16);
  }
  const ExperimentConfig m = parse_config(config_template(Family::Markowitz));
  CHECK(m.generator.n == 25);
  CHECK(m.generator.m == 1276);
}

TEST_CASE("CSV emission") {
  CHECK(format_csv(trace_with({})) == "k,mean_sqdist,se_sqdist,mean_feas,se_feas,mean_obj,se_obj,stepsize\n");

  std::vector<AggregateRow> rows;
  for (int i = 0; i < 3; ++i) {
    AggregateRow r;
    r.k = 10u * static_cast<unsigned>(i);
    r.mean_sqdist = 1.0 / 3.0 + i;
    r.se_sqdist = 1e-17 * (i + 1);
    r.mean_feas = 0.1 * i;
    r.mean_obj = -2.5e300;
    r.se_obj = std::numeric_limits<double>::quiet_NaN();
    r.stepsize = std::nextafter(1.0, 2.0);
    rows.push_back(r);
  }
  rows[2].mean_sqdist = std::numeric_limits<double>::infinity();
  const std::string text = format_csv(trace_with(rows));
  CHECK(count_lines(text) == 4);

  const std::vector<AggregateRow> back = parse_aggregate_csv(text);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].k == rows[i].k);
    CHECK(back[i].mean_sqdist == rows[i].mean_sqdist);
    CHECK(back[i].se_sqdist == rows[i].se_sqdist);
    CHECK(back[i].mean_feas == rows[i].mean_feas);
    CHECK(back[i].mean_obj == rows[i].mean_obj);
    CHECK(std::isnan(back[i].se_obj));
    CHECK(back[i].stepsize == rows[i].stepsize);
  }
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK_THROWS(parse_aggregate_csv("a,b\n1,2\n"));
}

TEST_CASE("aggregation") {
  CellSpec cell;
  std::vector<RunTrace> runs(3);
  const double values[3] = {1.0, 2.0, 4.0};
  for (int r = 0; r < 3; ++r) {
    for (std::uint64_t k : {0u, 5u}) {
      TraceRecord rec;
      rec.k = k;
      rec.stepsize = 0.5;
      rec.metrics.sqdist = values[r] * (k + 1);
      rec.metrics.objective = 3.0;
      runs[r].records.push_back(rec);
    }
  }
  const AggregateTrace t = aggregate(cell, runs, false);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].mean_sqdist == doctest::Approx(7.0 / 3.0));
  // Sample standard deviation over sqrt(n).
  const double var = ((1.0 - 7.0 / 3) * (1.0 - 7.0 / 3) + (2.0 - 7.0 / 3) * (2.0 - 7.0 / 3) +
                      (4.0 - 7.0 / 3) * (4.0 - 7.0 / 3)) / 2.0;
  CHECK(t.rows[0].se_sqdist == doctest::Approx(std::sqrt(var / 3.0)));
  CHECK(t.rows[1].mean_sqdist == doctest::Approx(14.0));
  CHECK(t.rows[0].se_obj == 0.0);
  CHECK(t.diverged == 0);

  runs[1].diverged = true;
  runs[1].records.pop_back();
  const AggregateTrace d = aggregate(cell, runs, false);
  CHECK(d.diverged == 1);
  CHECK(std::isinf(d.rows[1].mean_sqdist));
  CHECK(std::isfinite(d.rows[0].mean_sqdist));
}

TEST_CASE("SVG is well-formed XML with one polyline per series") {
  SvgPlot plot;
  plot.title = "a < b & c";
  plot.y_label = "E||x - x*||^2";
  SvgSeries flat;
  flat.label = "constant";
  flat.x = {0, 10, 20, 30};
  flat.y = {2.0, 2.0, 2.0, 2.0};
  plot.series.push_back(flat);
  const std::string svg = render_svg(plot);

  std::istringstream in(svg);
  boost::property_tree::ptree tree;
  REQUIRE_NOTHROW(boost::property_tree::read_xml(in, tree));
  CHECK(count_elements(tree, "polyline") == 1);
  const auto lines = find_elements(tree, "polyline");
  const std::string points = lines[0]->get<std::string>("<xmlattr>.points");
  std::istringstream ps(points);
  std::string pair;
  std::string y_first;
  while (ps >> pair) {
    const std::string y = pair.substr(pair.find(',') + 1);
    if (y_first.empty()) y_first = y;
    CHECK(y == y_first);
  }
  CHECK(svg.find("<script") == std::string::npos);
  CHECK(svg.find("a &lt; b &amp; c") != std::string::npos);
}

TEST_CASE("overlay adds a dashed polyline") {
  AggregateTrace t;
  t.cell.algorithm = Algorithm::SPP;
  for (int k = 0; k < 5; ++k) {
    AggregateRow r;
    r.k = static_cast<std::uint64_t>(k);
    r.mean_sqdist = 1.0 / (k + 1);
    t.rows.push_back(r);
    t.bound.push_back(2.0 / (k + 1));
  }
  t.bound_name = "bound";
  const SvgPlot plot = make_plot({t}, "overlay");
  REQUIRE(plot.series.size() == 2);
  CHECK_FALSE(plot.series[0].dashed);
  CHECK(plot.series[1].dashed);
  std::istringstream in(render_svg(plot));
  boost::property_tree::ptree tree;
  boost::property_tree::read_xml(in, tree);
  CHECK(count_elements(tree, "polyline") == 2);
  CHECK_THROWS(render_svg(SvgPlot{}));
}

TEST_CASE("log-log slope") {
  std::vector<double> k, y;
  for (int i = 0; i <= 1000; i += 10) {
    k.push_back(i);
    y.push_back(i == 0 ? 5.0 : 3.0 * std::pow(i, -0.7));
  }
  CHECK(loglog_slope(k, y) == doctest::Approx(-0.7));
}

TEST_CASE("one cell, one run gives one CSV and one SVG, reproducibly") {
  const fs::path dir = fresh_dir("single");
  ExperimentConfig c = tiny_config(dir);
  c.runs = 1;
  const ExperimentResult r = run_experiment(c);
  std::size_t csv = 0, svg = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    csv += e.path().extension() == ".csv";
    svg += e.path().extension() == ".svg";
  }
  CHECK(csv == 1);
  CHECK(svg == 1);
  CHECK(fs::exists(dir / "metadata.json"));
  const std::string first = read_file(dir / (c.cells()[0].id() + ".csv"));
  CHECK(count_lines(first) == 50 / 5 + 2);
  run_experiment(c);
  CHECK(read_file(dir / (c.cells()[0].id() + ".csv")) == first);
  fs::remove_all(dir);
}

TEST_CASE("per-run CSVs reproduce the aggregate") {
  const fs::path dir = fresh_dir("perrun");
  ExperimentConfig c = tiny_config(dir);
  c.runs = 4;
  c.per_run_csv = true;
  const ExperimentResult r = run_experiment(c);
  const AggregateTrace& t = r.cells.at(0);
  std::vector<std::vector<AggregateRow>> per_run;
  for (std::size_t i = 0; i < c.runs; ++i) {
    per_run.push_back(parse_aggregate_csv(read_file(dir / (t.cell.id() + "_run-" + std::to_string(i) + ".csv"))));
  }
  for (std::size_t row = 0; row < t.rows.size(); ++row) {
    double sum = 0.0;
    for (const auto& pr : per_run) sum += pr.at(row).mean_sqdist;
    const double mean = sum / c.runs;
    double ss = 0.0;
    for (const auto& pr : per_run) ss += (pr[row].mean_sqdist - mean) * (pr[row].mean_sqdist - mean);
    const double se = std::sqrt(ss / (c.runs - 1) / c.runs);
    CHECK(std::abs(mean - t.rows[row].mean_sqdist) <= 1e-12 * std::max(1.0, std::abs(mean)));
    CHECK(std::abs(se - t.rows[row].se_sqdist) <= 1e-12 * std::max(1.0, se));
  }
  fs::remove_all(dir);
}

TEST_CASE("serial and parallel runs agree byte for byte") {
  const fs::path a = fresh_dir("serial");
  const fs::path b = fresh_dir("parallel");
  ExperimentConfig c = tiny_config(a);
  c.algorithms = {Algorithm::SPP, Algorithm::SGD};
  RunOptions serial;
  serial.workers = 1;
  const ExperimentResult rs = run_experiment(c, serial);
  c.output_dir = b.string();
  RunOptions parallel;
  parallel.workers = 4;
  run_experiment(c, parallel);
  for (const auto& cell : c.cells()) {
    CHECK(read_file(a / (cell.id() + ".csv")) == read_file(b / (cell.id() + ".csv")));
  }
  CHECK(rs.cells.size() == 2);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("output directory environment override") {
  const fs::path configured = fresh_dir("configured");
  const fs::path env = fresh_dir("env");
  ExperimentConfig c = tiny_config(configured);
  c.runs = 1;
  setenv(kOutputDirEnv, env.c_str(), 1);
  run_experiment(c);
  unsetenv(kOutputDirEnv);
  CHECK(fs::exists(env / "metadata.json"));
  CHECK_FALSE(fs::exists(configured));
  fs::remove_all(env);
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = fresh_dir("cli");
  fs::create_directories(dir);
  const fs::path cfg = dir / "tiny.ini";
  {
    std::ofstream out(cfg);
    out << "[experiment]\nruns = 2\niterations = 20\nstride = 5\nkappa_probes = 10\noutput = "
        << (dir / "out").string() << "\n[problem]\nfamily = feasibility\nn = 4\nm = 5\n";
  }
  const fs::path bad = dir / "bad.ini";
  {
    std::ofstream out(bad);
    out << "[experiment]\nbogus = 1\n";
  }
  CHECK(run_cli("run " + cfg.string()) == 0);
  CHECK(fs::exists(dir / "out" / "metadata.json"));
  CHECK(run_cli("run " + bad.string()) == 1);
  CHECK(run_cli("run " + (dir / "missing.ini").string()) == 1);
  CHECK(run_cli("gen-config markowitz -o " + (dir / "m.ini").string()) == 0);
  CHECK(parse_config(read_file(dir / "m.ini")).generator.family == Family::Markowitz);
  CHECK(run_cli("gen-config moon") == 1);
  CHECK(run_cli("estimate-kappa " + cfg.string() + " --probes 10") == 0);
  CHECK(run_cli("plan --eps 0.1 --r0 1 --kappa 2 --lipschitz-sq 4 --sigma 1 --eta-sq 1") == 0);
  CHECK(run_cli("plan --eps 0.1 --config " + cfg.string()) == 0);
  CHECK(run_cli("plan") == 1);
  CHECK(run_cli("") == 1);
  fs::remove_all(dir);
}
