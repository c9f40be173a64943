#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "moscap/constants.hpp"
#include "moscap/errors.hpp"
#include "moscap/types.hpp"

namespace moscap::svg {

struct AxisLabels {
  std::string x = "Gate voltage (V)";
  std::string y = "Capacitance (pF)";
};

struct PlotOptions {
  std::string title;
  int width = 720;
  int height = 440;
};

namespace detail {

inline std::string escape(std::string_view s) {
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

inline std::string fixed(double v, int decimals = 2) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s == "-0.00" || s == "-0.0" || s == "-0") s.erase(0, 1);
  return s;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

struct Range {
  double lo;
  double hi;
};

// Data range padded by 5% of its span on each side. A degenerate range is
// padded by 5% of its magnitude, or by 1 when the value is zero.
inline Range padded(double lo, double hi) {
  double pad = 0.05 * (hi - lo);
  if (pad == 0.0) pad = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
  return {lo - pad, hi + pad};
}

// 1-2-5 tick spacing giving roughly `target` intervals.
inline std::vector<double> ticks(Range r, int target = 6) {
  const double raw = (r.hi - r.lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(r.lo / step) * step; t <= r.hi + 1e-9 * step; t += step)
    out.push_back(std::round(t / step) * step);
  return out;
}

inline const char* color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  return palette[i % (sizeof palette / sizeof palette[0])];
}

}  // namespace detail

/// Renders C-V curves as a standalone SVG line chart, capacitance in pF.
///
/// Output depends only on the inputs, so identical calls give identical bytes.
inline std::string render_svg_plot(std::span<const CVCurve> curves, const AxisLabels& axes = {},
                                   std::span<const std::string> series_labels = {},
                                   const PlotOptions& opt = {}) {
  require(!curves.empty(), "plot needs at least one curve");
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& c : curves) {
    require(!c.empty(), "plot curves must be non-empty");
    for (const auto& p : c.points) {
      xmin = std::min(xmin, p.bias);
      xmax = std::max(xmax, p.bias);
      ymin = std::min(ymin, units::to_pF(p.capacitance));
      ymax = std::max(ymax, units::to_pF(p.capacitance));
    }
  }
  const auto xr = detail::padded(xmin, xmax);
  const auto yr = detail::padded(ymin, ymax);

  const double left = 72, right = 170, top = 44, bottom = 56;
  const double pw = opt.width - left - right;
  const double ph = opt.height - top - bottom;
  auto sx = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto sy = [&](double y) { return top + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(opt.width) +
       "\" height=\"" + std::to_string(opt.height) + "\" viewBox=\"0 0 " +
       std::to_string(opt.width) + " " + std::to_string(opt.height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty())
    s += "<text x=\"" + detail::fixed(left + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">" + detail::escape(opt.title) + "</text>\n";

  // Axes frame, grid and ticks.
  s += "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#222\">\n";
  for (double t : detail::ticks(xr)) {
    const auto x = detail::fixed(sx(t));
    s += "<line x1=\"" + x + "\" y1=\"" + detail::fixed(top) + "\" x2=\"" + x + "\" y2=\"" +
         detail::fixed(top + ph) + "\" stroke=\"#e4e4e4\"/>\n";
    s += "<text x=\"" + x + "\" y=\"" + detail::fixed(top + ph + 16) +
         "\" text-anchor=\"middle\">" + detail::tick_label(t) + "</text>\n";
  }
  for (double t : detail::ticks(yr)) {
    const auto y = detail::fixed(sy(t));
    s += "<line x1=\"" + detail::fixed(left) + "\" y1=\"" + y + "\" x2=\"" +
         detail::fixed(left + pw) + "\" y2=\"" + y + "\" stroke=\"#e4e4e4\"/>\n";
    s += "<text x=\"" + detail::fixed(left - 6) + "\" y=\"" + detail::fixed(sy(t) + 4) +
         "\" text-anchor=\"end\">" + detail::tick_label(t) + "</text>\n";
  }
  s += "<rect x=\"" + detail::fixed(left) + "\" y=\"" + detail::fixed(top) + "\" width=\"" +
       detail::fixed(pw) + "\" height=\"" + detail::fixed(ph) +
       "\" fill=\"none\" stroke=\"#222\"/>\n";
  s += "<text x=\"" + detail::fixed(left + pw / 2) + "\" y=\"" +
       detail::fixed(opt.height - 14.0) + "\" text-anchor=\"middle\" font-size=\"13\">" +
       detail::escape(axes.x) + "</text>\n";
  s += "<text x=\"18\" y=\"" + detail::fixed(top + ph / 2) +
       "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 " +
       detail::fixed(top + ph / 2) + ")\">" + detail::escape(axes.y) + "</text>\n";
  s += "</g>\n";

  for (std::size_t i = 0; i < curves.size(); ++i) {
    s += "<polyline fill=\"none\" stroke=\"" + std::string(detail::color(i)) +
         "\" stroke-width=\"1.8\" points=\"";
    bool first = true;
    for (const auto& p : curves[i].points) {
      if (!first) s += ' ';
      first = false;
      s += detail::fixed(sx(p.bias)) + ',' + detail::fixed(sy(units::to_pF(p.capacitance)));
    }
    s += "\"/>\n";
  }

  // Legend, one entry per series.
  s += "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const double y = top + 14 + 20.0 * static_cast<double>(i);
    const double x = left + pw + 16;
    const std::string label =
        i < series_labels.size() ? series_labels[i] : "series " + std::to_string(i + 1);
    s += "<line x1=\"" + detail::fixed(x) + "\" y1=\"" + detail::fixed(y) + "\" x2=\"" +
         detail::fixed(x + 22) + "\" y2=\"" + detail::fixed(y) + "\" stroke=\"" +
         detail::color(i) + "\" stroke-width=\"2.5\"/>\n";
    s += "<text x=\"" + detail::fixed(x + 28) + "\" y=\"" + detail::fixed(y + 4) + "\">" +
         detail::escape(label) + "</text>\n";
  }
  s += "</g>\n</svg>\n";
  return s;
}

}  // namespace moscap::svg
