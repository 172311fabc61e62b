#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "rdn/errors.hpp"
#include "rdn/io/metrics.hpp"

namespace rdn::io {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartOptions {
  std::string title;
  std::string x_label = "episode";
  std::string y_label;
  bool clamp_unit = false;  // fix the y axis to [0, 1]
};

namespace detail {

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[i % 10];
}

}  // namespace detail

/// Line chart as standalone SVG text. Each series becomes one <polyline>
/// with id "series-<i>".
inline std::string render_svg(const std::vector<Series>& series, const ChartOptions& opt) {
  constexpr double width = 720, height = 440;
  constexpr double left = 70, right = 200, top = 40, bottom = 60;
  const double pw = width - left - right;
  const double ph = height - top - bottom;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1;
  if (!std::isfinite(ymin)) ymin = 0, ymax = 1;
  if (opt.clamp_unit) ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;

  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) {
    if (opt.clamp_unit) y = std::clamp(y, 0.0, 1.0);
    return top + (1.0 - (y - ymin) / (ymax - ymin)) * ph;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt(width) + "\" height=\"" +
         detail::fmt(height) + "\" viewBox=\"0 0 " + detail::fmt(width) + " " + detail::fmt(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + detail::fmt(left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">" + detail::escape_xml(opt.title) + "</text>\n";
  svg += "<g id=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
  svg += "<line x1=\"" + detail::fmt(left) + "\" y1=\"" + detail::fmt(top + ph) + "\" x2=\"" + detail::fmt(left + pw) +
         "\" y2=\"" + detail::fmt(top + ph) + "\"/>\n";
  svg += "<line x1=\"" + detail::fmt(left) + "\" y1=\"" + detail::fmt(top) + "\" x2=\"" + detail::fmt(left) +
         "\" y2=\"" + detail::fmt(top + ph) + "\"/>\n";
  svg += "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmin + (xmax - xmin) * k / 4.0;
    const double yv = ymin + (ymax - ymin) * k / 4.0;
    svg += "<text x=\"" + detail::fmt(px(xv)) + "\" y=\"" + detail::fmt(top + ph + 16) + "\" text-anchor=\"middle\">" +
           detail::tick_label(xv) + "</text>\n";
    svg += "<text x=\"" + detail::fmt(left - 6) + "\" y=\"" + detail::fmt(py(yv) + 4) + "\" text-anchor=\"end\">" +
           detail::tick_label(yv) + "</text>\n";
  }
  svg += "<text id=\"x-label\" x=\"" + detail::fmt(left + pw / 2) + "\" y=\"" + detail::fmt(height - 18) +
         "\" text-anchor=\"middle\">" + detail::escape_xml(opt.x_label) + "</text>\n";
  svg += "<text id=\"y-label\" x=\"18\" y=\"" + detail::fmt(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         detail::fmt(top + ph / 2) + ")\">" + detail::escape_xml(opt.y_label) + "</text>\n";
  svg += "</g>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    std::string points;
    const auto& ser = series[s];
    for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
      if (!std::isfinite(ser.x[i]) || !std::isfinite(ser.y[i])) continue;
      if (!points.empty()) points += ' ';
      points += detail::fmt(px(ser.x[i])) + "," + detail::fmt(py(ser.y[i]));
    }
    svg += "<polyline id=\"series-" + std::to_string(s) + "\" fill=\"none\" stroke=\"" + detail::palette(s) +
           "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
  }

  svg += "<g id=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double ly = top + 10 + 16.0 * static_cast<double>(s);
    const double lx = left + pw + 14;
    svg += "<line x1=\"" + detail::fmt(lx) + "\" y1=\"" + detail::fmt(ly) + "\" x2=\"" + detail::fmt(lx + 18) +
           "\" y2=\"" + detail::fmt(ly) + "\" stroke=\"" + detail::palette(s) + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + detail::fmt(lx + 24) + "\" y=\"" + detail::fmt(ly + 4) + "\">" +
           detail::escape_xml(series[s].name) + "</text>\n";
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

/// Display name of a metrics file: its directory for ".../<run>/metrics.csv",
/// the file stem otherwise.
inline std::string run_name(const std::filesystem::path& metrics_path) {
  if (metrics_path.filename() == "metrics.csv" && metrics_path.has_parent_path() &&
      !metrics_path.parent_path().filename().empty()) {
    return metrics_path.parent_path().filename().string();
  }
  return metrics_path.stem().string();
}

/// One polyline of `metric` against episode for every metrics file.
inline void emit_svg_curves(const std::string& metric, const std::vector<std::filesystem::path>& runs,
                            const std::filesystem::path& path) {
  if (metric == "episode") throw UsageError("'episode' is the x axis; choose a metric to plot");
  metric_value(train::MetricsRow{}, metric);  // validates the name
  std::vector<Series> series;
  for (const auto& run : runs) {
    Series s;
    s.name = run_name(run);
    for (const auto& row : read_metrics(run)) {
      s.x.push_back(static_cast<double>(row.episode));
      s.y.push_back(metric_value(row, metric));
    }
    series.push_back(std::move(s));
  }
  ChartOptions opt;
  opt.title = metric;
  opt.y_label = metric;
  opt.clamp_unit = metric == "win_rate";
  write_text(path, render_svg(series, opt));
}

}  // namespace rdn::io
