#include "spp/harness.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace spp {
namespace {

namespace pt = boost::property_tree;

std::string trimmed(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trimmed(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

// Strips "#" and ";" comments that follow a value on the same line.
std::string strip_comment(const std::string& value) {
  const auto pos = value.find_first_of("#;");
  return trimmed(pos == std::string::npos ? value : value.substr(0, pos));
}

double to_double(const std::string& where, const std::string& text) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw ConfigError(where + ": expected a number, got '" + text + "'");
  }
  return value;
}

std::uint64_t to_count(const std::string& where, const std::string& text) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(where + ": expected a nonnegative integer, got '" + text + "'");
  }
  return value;
}

bool to_bool(const std::string& where, std::string text) {
  std::transform(text.begin(), text.end(), text.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (text == "true" || text == "yes" || text == "on" || text == "1") return true;
  if (text == "false" || text == "no" || text == "off" || text == "0") return false;
  throw ConfigError(where + ": expected true or false, got '" + text + "'");
}

using Handler = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, std::map<std::string, Handler>>& grammar() {
  static const std::map<std::string, std::map<std::string, Handler>> g = {
      {"experiment",
       {
           {"name", [](auto& c, auto&, auto& v) { c.name = v; }},
           {"runs", [](auto& c, auto& w, auto& v) { c.runs = to_count(w, v); }},
           {"seed", [](auto& c, auto& w, auto& v) { c.base_seed = to_count(w, v); }},
           {"output", [](auto& c, auto&, auto& v) { c.output_dir = v; }},
           {"overlays", [](auto& c, auto& w, auto& v) { c.overlays = to_bool(w, v); }},
           {"kappa_probes", [](auto& c, auto& w, auto& v) { c.kappa_probes = to_count(w, v); }},
           {"iterations", [](auto& c, auto& w, auto& v) { c.iterations = to_count(w, v); }},
           {"stride", [](auto& c, auto& w, auto& v) { c.stride = to_count(w, v); }},
           {"workers", [](auto& c, auto& w, auto& v) { c.workers = to_count(w, v); }},
           {"per_run_csv", [](auto& c, auto& w, auto& v) { c.per_run_csv = to_bool(w, v); }},
           {"feasibility_tol",
            [](auto& c, auto& w, auto& v) { c.feasibility_tol = to_double(w, v); }},
       }},
      {"problem",
       {
           {"family",
            [](auto& c, auto& w, auto& v) {
              try {
                c.generator.family = parse_family(v);
              } catch (const std::invalid_argument& e) {
                throw ConfigError(w + ": " + e.what());
              }
            }},
           {"n", [](auto& c, auto& w, auto& v) { c.generator.n = to_count(w, v); }},
           {"m", [](auto& c, auto& w, auto& v) { c.generator.m = to_count(w, v); }},
           {"batch", [](auto& c, auto& w, auto& v) { c.generator.batch = to_count(w, v); }},
           {"constraints",
            [](auto& c, auto& w, auto& v) { c.generator.constraints = to_count(w, v); }},
           {"seed", [](auto& c, auto& w, auto& v) { c.generator.seed = to_count(w, v); }},
           {"noise", [](auto& c, auto& w, auto& v) { c.generator.noise = to_double(w, v); }},
           {"active", [](auto& c, auto& w, auto& v) { c.generator.active = to_count(w, v); }},
           {"slack", [](auto& c, auto& w, auto& v) { c.generator.slack = to_double(w, v); }},
           {"lambda", [](auto& c, auto& w, auto& v) { c.generator.lambda = to_double(w, v); }},
           {"coupling",
            [](auto& c, auto& w, auto& v) {
              if (v == "independent") {
                c.generator.coupling = Coupling::Independent;
              } else if (v == "paired") {
                c.generator.coupling = Coupling::Paired;
              } else {
                throw ConfigError(w + ": expected independent or paired, got '" + v + "'");
              }
            }},
           {"returns_csv", [](auto& c, auto&, auto& v) { c.returns_csv = v; }},
           {"target", [](auto& c, auto& w, auto& v) { c.markowitz.target = to_double(w, v); }},
           {"train_fraction",
            [](auto& c, auto& w, auto& v) { c.markowitz.train_fraction = to_double(w, v); }},
           {"split_seed",
            [](auto& c, auto& w, auto& v) { c.markowitz.seed = to_count(w, v); }},
       }},
      {"solvers",
       {
           {"algorithms",
            [](auto& c, auto& w, auto& v) {
              c.algorithms.clear();
              for (const auto& item : split_list(v)) {
                try {
                  c.algorithms.push_back(parse_algorithm(item));
                } catch (const std::invalid_argument& e) {
                  throw ConfigError(w + ": " + e.what());
                }
              }
            }},
           {"mu0",
            [](auto& c, auto& w, auto& v) {
              c.mu0.clear();
              for (const auto& item : split_list(v)) c.mu0.push_back(to_double(w, item));
            }},
           {"gamma",
            [](auto& c, auto& w, auto& v) {
              c.gamma.clear();
              for (const auto& item : split_list(v)) c.gamma.push_back(to_double(w, item));
            }},
       }},
  };
  return g;
}

std::string number_text(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

}  // namespace

StepsizeSchedule CellSpec::schedule() const {
  return gamma == 0.0 ? StepsizeSchedule::constant(mu0) : StepsizeSchedule::poly_decay(mu0, gamma);
}

std::string CellSpec::id() const {
  std::string alg = to_string(algorithm);
  std::string out;
  for (char ch : alg) {
    if (ch != '-') out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  return out + "_mu0-" + number_text(mu0) + "_gamma-" + number_text(gamma);
}

std::string CellSpec::label() const {
  std::string out = std::string(to_string(algorithm)) + " mu0=" + number_text(mu0);
  if (gamma == 0.0) out += " (constant)";
  return out;
}

std::vector<CellSpec> ExperimentConfig::cells() const {
  std::vector<CellSpec> out;
  for (double g : gamma) {
    for (double m : mu0) {
      for (Algorithm a : algorithms) out.push_back(CellSpec{a, m, g});
    }
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (runs < 1) throw ConfigError("experiment.runs must be >= 1");
  if (algorithms.empty()) throw ConfigError("solvers.algorithms must name at least one algorithm");
  if (mu0.empty()) throw ConfigError("solvers.mu0 must list at least one value");
  if (gamma.empty()) throw ConfigError("solvers.gamma must list at least one value");
  for (double m : mu0) {
    if (!(m > 0.0)) throw ConfigError("solvers.mu0 values must be > 0");
  }
  for (double g : gamma) {
    if (!(g >= 0.0)) throw ConfigError("solvers.gamma values must be >= 0");
  }
  for (const CellSpec& cell : cells()) {
    if (cell.algorithm == Algorithm::RSPP && cell.gamma == 0.0) {
      throw ConfigError("RSPP needs gamma > 0 (its epochs are sized by t^gamma)");
    }
  }
  if (output_dir.empty()) throw ConfigError("experiment.output must not be empty");
  if (!(feasibility_tol >= 0.0)) throw ConfigError("experiment.feasibility_tol must be >= 0");
  if (generator.family == Family::Markowitz) {
    if (!(markowitz.train_fraction > 0.0 && markowitz.train_fraction <= 1.0)) {
      throw ConfigError("problem.train_fraction must lie in (0, 1]");
    }
  } else if (!returns_csv.empty()) {
    throw ConfigError("problem.returns_csv is only valid for the markowitz family");
  }
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }
  ExperimentConfig config;
  std::set<std::string> seen;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("config: key '" + section + "' must appear inside a section");
    }
    const auto& sections = grammar();
    const auto sit = sections.find(section);
    if (sit == sections.end()) {
      throw ConfigError("config: unknown section [" + section +
                        "] (expected experiment, problem or solvers)");
    }
    for (const auto& [key, node] : body) {
      const auto kit = sit->second.find(key);
      const std::string where = section + "." + key;
      if (kit == sit->second.end()) throw ConfigError("config: unknown key '" + where + "'");
      const std::string value = strip_comment(node.data());
      if (value.empty()) throw ConfigError("config: '" + where + "' has no value");
      kit->second(config, where, value);
      seen.insert(where);
    }
  }
  if (config.generator.family == Family::Markowitz) {
    if (!seen.count("problem.n")) config.generator.n = 25;
    if (!seen.count("problem.m")) config.generator.m = 1276;
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_template(Family family) {
  GeneratorSpec g;
  g.family = family;
  std::ostringstream out;
  out << "# Experiment configuration. Sections and keys are fixed; unknown keys are\n"
         "# errors. Every key is optional and shows its default. Lists are\n"
         "# comma separated. Comments start with # or ;.\n\n"
         "[experiment]\n"
         "name = " << to_string(family) << "\n"
         "runs = 30              # Monte-Carlo runs per cell, seeds seed+0 .. seed+runs-1\n"
         "seed = 1\n"
         "output = out           # overridden by $" << kOutputDirEnv << "\n"
         "overlays = true        # dashed theoretical bounds for SPP cells\n"
         "kappa_probes = 200     # probes for the linear-regularity estimate\n"
         "iterations = 0         # 0 = one pass (number of loss components)\n"
         "stride = 0             # record every stride-th iterate; 0 = about 100 records\n"
         "workers = 0            # 0 = available hardware threads\n"
         "per_run_csv = false    # also write one CSV per run\n"
         "feasibility_tol = 1e-10\n\n"
         "[problem]\n"
         "family = " << to_string(family) << "  # constrained-ls, random-ls-polyhedron, markowitz,\n"
         "                        # feasibility, finite-sum\n";
  switch (family) {
    case Family::Markowitz:
      out << "n = 25                 # assets of the synthetic returns table\n"
             "m = 1276               # periods of the synthetic returns table\n"
             "seed = 1               # synthetic returns seed\n"
             "# returns_csv = returns.csv  # load a table instead (header row, optional date column)\n"
             "# target = 0.001       # default: mean of the per-asset training means\n"
             "train_fraction = 0.9\n"
             "split_seed = 1\n\n"
             "[solvers]\n"
             "algorithms = SPP, A-SPP, RSPP, SGD\n"
             "mu0 = 0.5, 1\n"
             "gamma = 0.5, 1         # 0 = constant stepsize mu0\n";
      return out.str();
    case Family::Feasibility:
    case Family::FiniteSum:
      out << "n = " << g.n << "\n"
             "m = " << g.m << "               # loss components (finite-sum) or halfspaces (feasibility)\n"
             "# constraints = 100    # halfspaces; default one per row\n"
             "seed = 1\n"
             "lambda = 1\n"
             "slack = 1\n"
             "coupling = independent # or paired\n\n";
      break;
    case Family::ConstrainedLs:
    case Family::RandomLsPolyhedron:
      out << "n = " << g.n << "\n"
             "m = " << g.m << "               # observations\n"
             "batch = 0              # rows per batch component; 0 = family default\n"
             "# constraints = 1050   # halfspaces; default one per loss component\n"
             "seed = 1\n"
             "noise = 1\n"
             "active = 3             # halfspaces tight at the planted solution\n"
             "slack = 1\n"
             "coupling = independent # or paired\n\n";
      break;
  }
  out << "[solvers]\n"
         "algorithms = SPP, A-SPP, RSPP, SGD\n"
         "mu0 = 0.5, 1\n"
         "gamma = 0.5, 1         # 0 = constant stepsize mu0\n";
  return out.str();
}

StochasticProblem build_problem(const ExperimentConfig& config) {
  if (config.generator.family == Family::Markowitz) {
    const ReturnsTable table = config.returns_csv.empty()
                                   ? synthetic_returns(config.generator.m, config.generator.n,
                                                       config.generator.seed)
                                   : load_returns_csv(config.returns_csv);
    return build_markowitz(table, config.markowitz).problem;
  }
  return generate(config.generator).problem;
}

}  // namespace spp
