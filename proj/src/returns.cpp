#include "spp/problems.hpp"

#include "spp/qp.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

namespace spp {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.size() - start
                                                                          : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_number(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

}  // namespace

ReturnsTable make_returns_table(std::vector<std::string> assets, Matrix returns) {
  if (static_cast<Eigen::Index>(assets.size()) != returns.cols()) {
    throw DimensionError("make_returns_table: one name per column required");
  }
  if (returns.rows() < 2) throw std::invalid_argument("make_returns_table: need at least 2 periods");
  if (!returns.allFinite()) throw std::invalid_argument("make_returns_table: non-finite returns");
  ReturnsTable t;
  t.assets = std::move(assets);
  t.mean = returns.colwise().mean().transpose();
  t.returns = std::move(returns);
  return t;
}

ReturnsTable parse_returns_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw CsvError("returns CSV: empty input", line_no);
  if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  for (auto cell : split_commas(line)) header.emplace_back(cell);
  const std::size_t header_line = line_no;

  std::vector<std::vector<double>> rows;
  std::optional<bool> has_index;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw CsvError("returns CSV line " + std::to_string(line_no) + ": expected " +
                         std::to_string(header.size()) + " cells, found " +
                         std::to_string(cells.size()),
                     line_no);
    }
    if (!has_index) has_index = !parse_number(cells[0]).has_value() && !cells[0].empty();
    const std::size_t first = *has_index ? 1 : 0;
    std::vector<double> row;
    row.reserve(cells.size() - first);
    for (std::size_t j = first; j < cells.size(); ++j) {
      const auto value = parse_number(cells[j]);
      if (!value) {
        const std::string what = cells[j].empty() ? "missing value" : "non-numeric value '" + std::string(cells[j]) + "'";
        throw CsvError("returns CSV line " + std::to_string(line_no) + ", column " +
                           std::to_string(j + 1) + " (" + header[j] + "): " + what,
                       line_no);
      }
      row.push_back(*value);
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) {
    throw CsvError("returns CSV: need at least 2 data rows, found " + std::to_string(rows.size()),
                   line_no);
  }
  const std::size_t first = has_index.value_or(false) ? 1 : 0;
  if (header.size() <= first) throw CsvError("returns CSV: no asset columns", header_line);
  std::vector<std::string> assets(header.begin() + static_cast<std::ptrdiff_t>(first), header.end());
  Matrix R(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(assets.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < assets.size(); ++j) {
      R(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return make_returns_table(std::move(assets), std::move(R));
}

ReturnsTable load_returns_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_returns_csv: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_returns_csv(buf.str());
}

void write_returns_csv(const ReturnsTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_returns_csv: cannot open '" + path + "'");
  out << "period";
  for (const auto& name : table.assets) out << ',' << name;
  out << '\n';
  for (Eigen::Index i = 0; i < table.returns.rows(); ++i) {
    out << 'd' << i;
    for (Eigen::Index j = 0; j < table.returns.cols(); ++j) out << ',' << format_double(table.returns(i, j));
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_returns_csv: write failed for '" + path + "'");
}

ReturnsTable synthetic_returns(std::size_t periods, std::size_t assets, std::uint64_t seed) {
  if (periods < 2 || assets < 1) throw std::invalid_argument("synthetic_returns: need T >= 2, n >= 1");
  RandomSource rng(seed);
  const auto T = static_cast<Eigen::Index>(periods);
  const auto n = static_cast<Eigen::Index>(assets);
  Vector drift(n);
  Vector beta(n);
  Vector vol(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    drift[j] = rng.uniform(-2e-4, 1e-3);
    beta[j] = rng.uniform(0.5, 1.5);
    vol[j] = rng.uniform(0.008, 0.025);
  }
  Matrix R(T, n);
  for (Eigen::Index t = 0; t < T; ++t) {
    const double market = 0.01 * rng.normal();
    for (Eigen::Index j = 0; j < n; ++j) R(t, j) = drift[j] + beta[j] * market + vol[j] * rng.normal();
  }
  std::vector<std::string> names;
  names.reserve(assets);
  for (std::size_t j = 0; j < assets; ++j) names.push_back("A" + std::to_string(j + 1));
  return make_returns_table(std::move(names), std::move(R));
}

MarkowitzInstance build_markowitz(const ReturnsTable& table, const MarkowitzOptions& options) {
  const std::size_t T = table.periods();
  const std::size_t n = table.assets_count();
  if (T < 2 || n < 1) throw std::invalid_argument("build_markowitz: table too small");
  if (!(options.train_fraction > 0.0 && options.train_fraction <= 1.0)) {
    throw std::invalid_argument("build_markowitz: train_fraction must lie in (0, 1]");
  }
  std::vector<std::size_t> order(T);
  for (std::size_t i = 0; i < T; ++i) order[i] = i;
  RandomSource rng(options.seed);
  for (std::size_t i = T - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_index(i + 1)]);

  const auto train_count = static_cast<std::size_t>(std::floor(options.train_fraction * static_cast<double>(T)));
  if (train_count == 0) throw std::invalid_argument("build_markowitz: empty training split");

  MarkowitzInstance inst;
  inst.train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_count));
  inst.test_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(train_count), order.end());

  const auto N = static_cast<Eigen::Index>(n);
  inst.average_returns = Vector::Zero(N);
  for (std::size_t r : inst.train_rows) inst.average_returns += table.returns.row(static_cast<Eigen::Index>(r)).transpose();
  inst.average_returns /= static_cast<double>(train_count);
  inst.target = options.target ? *options.target : inst.average_returns.mean();
  const double b = inst.target;

  ProblemData data;
  data.family = to_string(Family::Markowitz);
  data.n = n;
  for (std::size_t r : inst.train_rows) {
    data.losses.push_back(LossComponent::linear_residual(table.returns.row(static_cast<Eigen::Index>(r)).transpose(), b));
  }
  const Vector ones = Vector::Ones(N);
  data.sets = {ConstraintSet::nonneg_orthant(n), ConstraintSet::halfspace(ones, 1.0),
               ConstraintSet::halfspace(-inst.average_returns, -b)};
  data.coupling = Coupling::Independent;

  Matrix test(static_cast<Eigen::Index>(inst.test_rows.size()), N);
  for (std::size_t i = 0; i < inst.test_rows.size(); ++i) {
    test.row(static_cast<Eigen::Index>(i)) = table.returns.row(static_cast<Eigen::Index>(inst.test_rows[i]));
  }
  if (test.rows() > 0) {
    data.test_objective = [test, b](const Vector& x) {
      return (test * x - Vector::Constant(test.rows(), b)).squaredNorm() / static_cast<double>(test.rows());
    };
  }

  // The uniform portfolio meets the return constraint with equality when b is
  // the mean of the average returns; otherwise search from it.
  Vector start = ones / static_cast<double>(n);
  if (-inst.average_returns.dot(start) > -b + 1e-12) {
    const Eigen::Index best = [&] {
      Eigen::Index idx = 0;
      inst.average_returns.maxCoeff(&idx);
      return idx;
    }();
    if (inst.average_returns[best] < b) {
      throw std::invalid_argument("build_markowitz: target return exceeds every asset's mean");
    }
    start = Vector::Unit(N, best);
  }
  data.feasible_point = start;
  data.initial_point = start;
  data.optimum = solve_reference_optimum(data, start);
  inst.problem = StochasticProblem(std::move(data));
  return inst;
}

}  // namespace spp
