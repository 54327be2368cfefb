#include "spp/harness.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace spp {
namespace {

constexpr const char* kCsvHeader = "k,mean_sqdist,se_sqdist,mean_feas,se_feas,mean_obj,se_obj,stepsize";

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                 "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(ch);
    }
  }
  return out;
}

std::string fixed2(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("0");
}

std::string csv_row(const AggregateRow& r) {
  std::string line = std::to_string(r.k);
  for (double v : {r.mean_sqdist, r.se_sqdist, r.mean_feas, r.se_feas, r.mean_obj, r.se_obj, r.stepsize}) {
    line += ',';
    line += format_number(v);
  }
  line += '\n';
  return line;
}

double parse_cell(const std::string& cell, std::size_t line) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (cell == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("aggregate CSV line " + std::to_string(line) + ": bad number '" + cell + "'");
  }
  return value;
}

double plotted_value(const AggregateTrace& t, const AggregateRow& r) {
  if (t.plotted == "sqdist") return r.mean_sqdist;
  return r.mean_obj;
}

std::string y_label_for(const std::string& plotted) {
  if (plotted == "sqdist") return "mean ||x^k - x*||^2";
  if (plotted == "test_objective") return "mean F_test(x^k)";
  return "mean F(x^k)";
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  if (ec != std::errc()) throw std::runtime_error("format_number: conversion failed");
  return std::string(buf, ptr);
}

std::string format_csv(const AggregateTrace& trace) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const AggregateRow& r : trace.rows) out += csv_row(r);
  return out;
}

void emit_csv(const AggregateTrace& trace, const std::string& path) { write_file(path, format_csv(trace)); }

void emit_run_csv(const RunTrace& run, bool use_test_objective, const std::string& path) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const TraceRecord& rec : run.records) {
    AggregateRow r;
    r.k = rec.k;
    r.mean_sqdist = rec.metrics.sqdist;
    r.mean_feas = rec.metrics.feasibility;
    r.mean_obj = use_test_objective ? rec.metrics.test_objective : rec.metrics.objective;
    r.stepsize = rec.stepsize;
    out += csv_row(r);
  }
  write_file(path, out);
}

std::vector<AggregateRow> parse_aggregate_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::invalid_argument("aggregate CSV: missing or unexpected header");
  }
  std::vector<AggregateRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) {
      throw std::invalid_argument("aggregate CSV line " + std::to_string(line_no) + ": expected 8 cells");
    }
    AggregateRow r;
    const auto [ptr, ec] = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), r.k);
    if (ec != std::errc() || ptr != cells[0].data() + cells[0].size()) {
      throw std::invalid_argument("aggregate CSV line " + std::to_string(line_no) + ": bad k");
    }
    r.mean_sqdist = parse_cell(cells[1], line_no);
    r.se_sqdist = parse_cell(cells[2], line_no);
    r.mean_feas = parse_cell(cells[3], line_no);
    r.se_feas = parse_cell(cells[4], line_no);
    r.mean_obj = parse_cell(cells[5], line_no);
    r.se_obj = parse_cell(cells[6], line_no);
    r.stepsize = parse_cell(cells[7], line_no);
    rows.push_back(r);
  }
  return rows;
}

SvgPlot make_plot(const std::vector<AggregateTrace>& traces, const std::string& title) {
  SvgPlot plot;
  plot.title = title;
  plot.y_label = traces.empty() ? "" : y_label_for(traces.front().plotted);
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const AggregateTrace& t = traces[i];
    SvgSeries s;
    s.label = t.cell.label();
    s.color = i;
    for (const AggregateRow& r : t.rows) {
      s.x.push_back(static_cast<double>(r.k));
      s.y.push_back(plotted_value(t, r));
    }
    plot.series.push_back(std::move(s));
    if (!t.bound.empty() && t.bound.size() == t.rows.size()) {
      SvgSeries b;
      b.label = t.bound_name + ", " + t.cell.label();
      b.color = i;
      b.dashed = true;
      for (std::size_t j = 0; j < t.rows.size(); ++j) {
        b.x.push_back(static_cast<double>(t.rows[j].k));
        b.y.push_back(t.bound[j]);
      }
      plot.series.push_back(std::move(b));
    }
  }
  return plot;
}

std::string render_svg(const SvgPlot& plot) {
  if (plot.series.empty()) throw std::invalid_argument("render_svg: no series");
  constexpr double W = 820.0, H = 500.0;
  constexpr double left = 80.0, right = 250.0, top = 45.0, bottom = 60.0;
  const double pw = W - left - right;
  const double ph = H - top - bottom;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin_pos = std::numeric_limits<double>::infinity(), ymax = -ymin_pos;
  for (const SvgSeries& s : plot.series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("render_svg: x and y sizes differ");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      if (s.y[i] > 0.0) {
        ymin_pos = std::min(ymin_pos, s.y[i]);
        ymax = std::max(ymax, s.y[i]);
      }
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = 0.0;
    xmax = 1.0;
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (!std::isfinite(ymin_pos)) {
    ymin_pos = 1.0;
    ymax = 10.0;
  }
  double lo = std::floor(std::log10(ymin_pos));
  double hi = std::ceil(std::log10(ymax));
  if (hi <= lo) hi = lo + 1.0;

  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) {
    const double ly = std::log10(std::max(y, ymin_pos));
    return top + (hi - ly) / (hi - lo) * ph;
  };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
      << "<text x=\"" << fixed2(left + pw / 2) << "\" y=\"25\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">" << xml_escape(plot.title) << "</text>\n";

  // Axes, decade grid and ticks.
  out << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  const int decades = static_cast<int>(hi - lo);
  const int step = std::max(1, decades / 10);
  for (int d = static_cast<int>(lo); d <= static_cast<int>(hi); d += step) {
    const double y = top + (hi - d) / (hi - lo) * ph;
    out << "<line x1=\"" << fixed2(left) << "\" y1=\"" << fixed2(y) << "\" x2=\"" << fixed2(left + pw)
        << "\" y2=\"" << fixed2(y) << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n"
        << "<text x=\"" << fixed2(left - 6) << "\" y=\"" << fixed2(y + 4) << "\" text-anchor=\"end\">1e"
        << d << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 5.0;
    const double x = px(xv);
    out << "<line x1=\"" << fixed2(x) << "\" y1=\"" << fixed2(top + ph) << "\" x2=\"" << fixed2(x) << "\" y2=\""
        << fixed2(top + ph + 5) << "\" stroke=\"black\" stroke-width=\"1\"/>\n"
        << "<text x=\"" << fixed2(x) << "\" y=\"" << fixed2(top + ph + 18) << "\" text-anchor=\"middle\">"
        << std::llround(xv) << "</text>\n";
  }
  out << "<rect x=\"" << fixed2(left) << "\" y=\"" << fixed2(top) << "\" width=\"" << fixed2(pw) << "\" height=\""
      << fixed2(ph) << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n"
      << "<text x=\"" << fixed2(left + pw / 2) << "\" y=\"" << fixed2(H - 15)
      << "\" text-anchor=\"middle\" font-size=\"13\">" << xml_escape(plot.x_label) << "</text>\n"
      << "<text x=\"18\" y=\"" << fixed2(top + ph / 2) << "\" text-anchor=\"middle\" font-size=\"13\" "
         "transform=\"rotate(-90 18 " << fixed2(top + ph / 2) << ")\">" << xml_escape(plot.y_label)
      << " (log scale)</text>\n</g>\n";

  for (const SvgSeries& s : plot.series) {
    const char* color = kPalette[s.color % kPalette.size()];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << (s.dashed ? "1.5" : "2")
        << '"' << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!first) out << ' ';
      out << fixed2(px(s.x[i])) << ',' << fixed2(py(s.y[i]));
      first = false;
    }
    out << "\"/>\n";
  }

  out << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  const double lx = left + pw + 15.0;
  for (std::size_t i = 0; i < plot.series.size(); ++i) {
    const SvgSeries& s = plot.series[i];
    const double y = top + 10.0 + 16.0 * static_cast<double>(i);
    out << "<line x1=\"" << fixed2(lx) << "\" y1=\"" << fixed2(y) << "\" x2=\"" << fixed2(lx + 24) << "\" y2=\""
        << fixed2(y) << "\" stroke=\"" << kPalette[s.color % kPalette.size()] << "\" stroke-width=\"2\""
        << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n"
        << "<text x=\"" << fixed2(lx + 30) << "\" y=\"" << fixed2(y + 4) << "\">" << xml_escape(s.label)
        << "</text>\n";
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

void emit_svg(const SvgPlot& plot, const std::string& path) { write_file(path, render_svg(plot)); }

double loglog_slope(const std::vector<double>& k, const std::vector<double>& y) {
  if (k.size() != y.size()) throw std::invalid_argument("loglog_slope: size mismatch");
  double kmax = 0.0;
  for (double v : k) kmax = std::max(kmax, v);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (!(k[i] > 0.0) || k[i] < kmax / 10.0 || !(y[i] > 0.0) || !std::isfinite(y[i])) continue;
    const double lx = std::log(k[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  const double dn = static_cast<double>(n);
  const double denom = dn * sxx - sx * sx;
  if (n < 2 || !(denom > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return (dn * sxy - sx * sy) / denom;
}

}  // namespace spp
