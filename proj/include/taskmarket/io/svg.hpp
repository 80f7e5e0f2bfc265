#pragma once

// Minimal deterministic SVG line charts: axes, ticks, polylines, legend.
// Coordinates print with three decimals; nothing depends on time or memory.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace taskmarket::io {

struct Series {
  std::string name;
  std::vector<std::pair<double, std::optional<double>>> points;  // gaps break the line
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

namespace detail {

inline std::string fmt3(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return std::string(buf) == "-0.000" ? "0.000" : buf;
}

inline std::string tick_label(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

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

inline constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                     "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

inline std::string render_panel(const LineChart& chart, double ox, double oy, double w, double h) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : chart.series) {
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      if (y) {
        ymin = std::min(ymin, *y);
        ymax = std::max(ymax, *y);
      }
    }
  }
  if (!std::isfinite(xmin)) xmin = 0.0, xmax = 1.0;
  if (!std::isfinite(ymin)) ymin = 0.0, ymax = 1.0;
  if (xmax - xmin < 1e-12) xmin -= 0.5, xmax += 0.5;
  if (ymax - ymin < 1e-12) ymin -= 0.5, ymax += 0.5;
  ymin = std::min(ymin, 0.0);

  const double left = ox + 60.0, right = ox + w - 150.0, top = oy + 30.0, bottom = oy + h - 45.0;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (right - left); };
  auto py = [&](double y) { return bottom - (y - ymin) / (ymax - ymin) * (bottom - top); };

  std::string out;
  out += "<g>\n";
  out += "<text x=\"" + fmt3((left + right) / 2) + "\" y=\"" + fmt3(oy + 18.0) +
         "\" text-anchor=\"middle\" font-size=\"14\">" + escape_xml(chart.title) + "</text>\n";
  out += "<rect x=\"" + fmt3(left) + "\" y=\"" + fmt3(top) + "\" width=\"" + fmt3(right - left) + "\" height=\"" +
         fmt3(bottom - top) + "\" fill=\"none\" stroke=\"#333333\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    out += "<line x1=\"" + fmt3(px(xv)) + "\" y1=\"" + fmt3(bottom) + "\" x2=\"" + fmt3(px(xv)) + "\" y2=\"" +
           fmt3(bottom + 5.0) + "\" stroke=\"#333333\"/>\n";
    out += "<text x=\"" + fmt3(px(xv)) + "\" y=\"" + fmt3(bottom + 18.0) +
           "\" text-anchor=\"middle\" font-size=\"11\">" + tick_label(xv) + "</text>\n";
    out += "<line x1=\"" + fmt3(left - 5.0) + "\" y1=\"" + fmt3(py(yv)) + "\" x2=\"" + fmt3(left) + "\" y2=\"" +
           fmt3(py(yv)) + "\" stroke=\"#333333\"/>\n";
    out += "<text x=\"" + fmt3(left - 8.0) + "\" y=\"" + fmt3(py(yv) + 4.0) +
           "\" text-anchor=\"end\" font-size=\"11\">" + tick_label(yv) + "</text>\n";
  }
  out += "<text x=\"" + fmt3((left + right) / 2) + "\" y=\"" + fmt3(bottom + 36.0) +
         "\" text-anchor=\"middle\" font-size=\"12\">" + escape_xml(chart.x_label) + "</text>\n";
  out += "<text x=\"" + fmt3(ox + 14.0) + "\" y=\"" + fmt3((top + bottom) / 2) +
         "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 " + fmt3(ox + 14.0) + " " +
         fmt3((top + bottom) / 2) + ")\">" + escape_xml(chart.y_label) + "</text>\n";

  for (std::size_t s = 0; s < chart.series.size(); ++s) {
    const char* color = kPalette[s % kPalette.size()];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty()) {
        out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" +
               pts + "\"/>\n";
      }
      pts.clear();
    };
    for (const auto& [x, y] : chart.series[s].points) {
      if (!y) {
        flush();
        continue;
      }
      if (!pts.empty()) pts += ' ';
      pts += fmt3(px(x)) + "," + fmt3(py(*y));
    }
    flush();
    const double ly = top + 10.0 + 16.0 * static_cast<double>(s);
    out += "<line x1=\"" + fmt3(right + 12.0) + "\" y1=\"" + fmt3(ly) + "\" x2=\"" + fmt3(right + 32.0) +
           "\" y2=\"" + fmt3(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + fmt3(right + 37.0) + "\" y=\"" + fmt3(ly + 4.0) + "\" font-size=\"11\">" +
           escape_xml(chart.series[s].name) + "</text>\n";
  }
  out += "</g>\n";
  return out;
}

}  // namespace detail

// Charts stacked vertically in one document.
inline std::string render_svg(const std::vector<LineChart>& charts, double width = 720.0,
                              double panel_height = 320.0) {
  const double height = panel_height * static_cast<double>(charts.size());
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt3(width) + "\" height=\"" +
         detail::fmt3(height) + "\" viewBox=\"0 0 " + detail::fmt3(width) + " " + detail::fmt3(height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  for (std::size_t i = 0; i < charts.size(); ++i) {
    out += detail::render_panel(charts[i], 0.0, panel_height * static_cast<double>(i), width, panel_height);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace taskmarket::io
