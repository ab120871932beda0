#include "rgan/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rgan/errors.hpp"

namespace rgan::plot {

namespace {

const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
                               "#7f7f7f"};

const char* color(std::size_t i) { return kColors[i % (sizeof kColors / sizeof kColors[0])]; }

std::string escape(const std::string& s) {
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

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string header(const Viewport& v, const std::string& title) {
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + coord(v.width) + "\" height=\"" +
                    coord(v.height) + "\" viewBox=\"0 0 " + coord(v.width) + ' ' + coord(v.height) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + coord(v.width) + "\" height=\"" + coord(v.height) +
         "\" fill=\"white\"/>\n";
  out += "<text x=\"" + coord(v.width / 2) + "\" y=\"14\" text-anchor=\"middle\" font-size=\"13\">" +
         escape(title) + "</text>\n";
  return out;
}

std::string axes(const Range& xr, const Range& yr, const Viewport& v, const std::string& x_label,
                 const std::string& y_label) {
  const double x0 = v.left, x1 = v.width - v.right, y0 = v.height - v.bottom, y1 = v.top;
  std::string out = "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
  out += "<line x1=\"" + coord(x0) + "\" y1=\"" + coord(y0) + "\" x2=\"" + coord(x1) + "\" y2=\"" + coord(y0) +
         "\"/>\n";
  out += "<line x1=\"" + coord(x0) + "\" y1=\"" + coord(y0) + "\" x2=\"" + coord(x0) + "\" y2=\"" + coord(y1) +
         "\"/>\n";
  out += "</g>\n<g class=\"ticks\" font-size=\"10\">\n";
  constexpr int kTicks = 5;
  for (int i = 0; i < kTicks; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / (kTicks - 1);
    const double px = map_x(fx, xr, v);
    out += "<line x1=\"" + coord(px) + "\" y1=\"" + coord(y0) + "\" x2=\"" + coord(px) + "\" y2=\"" +
           coord(y0 + 4) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + coord(px) + "\" y=\"" + coord(y0 + 16) + "\" text-anchor=\"middle\">" + tick_label(fx) +
           "</text>\n";
    const double fy = yr.lo + (yr.hi - yr.lo) * i / (kTicks - 1);
    const double py = map_y(fy, yr, v);
    out += "<line x1=\"" + coord(x0 - 4) + "\" y1=\"" + coord(py) + "\" x2=\"" + coord(x0) + "\" y2=\"" +
           coord(py) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + coord(x0 - 6) + "\" y=\"" + coord(py + 3) + "\" text-anchor=\"end\">" + tick_label(fy) +
           "</text>\n";
  }
  out += "</g>\n";
  if (!x_label.empty()) {
    out += "<text x=\"" + coord((x0 + x1) / 2) + "\" y=\"" + coord(v.height - 6) +
           "\" text-anchor=\"middle\" font-size=\"11\">" + escape(x_label) + "</text>\n";
  }
  if (!y_label.empty()) {
    out += "<text x=\"12\" y=\"" + coord((y0 + y1) / 2) + "\" text-anchor=\"middle\" font-size=\"11\" transform=\"rotate(-90 12 " +
           coord((y0 + y1) / 2) + ")\">" + escape(y_label) + "</text>\n";
  }
  return out;
}

std::string legend(const std::vector<Series>& series, const Viewport& v) {
  std::string out = "<g class=\"legend\" font-size=\"10\">\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = v.top + 6 + 14 * static_cast<double>(i);
    const double x = v.width - v.right - 120;
    out += "<rect x=\"" + coord(x) + "\" y=\"" + coord(y - 7) + "\" width=\"10\" height=\"10\" fill=\"" +
           color(i) + "\"/>\n";
    out += "<text x=\"" + coord(x + 14) + "\" y=\"" + coord(y + 2) + "\">" + escape(series[i].label) + "</text>\n";
  }
  out += "</g>\n";
  return out;
}

void collect(const std::vector<Series>& series, std::vector<double>& xs, std::vector<double>& ys) {
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw DimensionError("series '" + s.label + "' has unequal x and y lengths");
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
  }
}

}  // namespace

Range data_range(const std::vector<double>& values) {
  bool any = false;
  Range r{0.0, 0.0};
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    if (!any) {
      r = {v, v};
      any = true;
    }
    r.lo = std::min(r.lo, v);
    r.hi = std::max(r.hi, v);
  }
  if (!any) return {0.0, 1.0};
  if (r.lo == r.hi) return {r.lo - 0.5, r.hi + 0.5};
  return r;
}

double map_x(double x, const Range& r, const Viewport& v) {
  return v.left + (x - r.lo) / (r.hi - r.lo) * (v.width - v.left - v.right);
}

double map_y(double y, const Range& r, const Viewport& v) {
  return v.top + (r.hi - y) / (r.hi - r.lo) * (v.height - v.top - v.bottom);
}

std::string coord(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string line_chart(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                       const std::string& y_label, const Viewport& view) {
  std::vector<double> xs, ys;
  collect(series, xs, ys);
  const auto xr = data_range(xs), yr = data_range(ys);
  std::string out = header(view, title) + axes(xr, yr, view, x_label, y_label);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    std::string points;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      if (!points.empty()) points += ' ';
      points += coord(map_x(s.x[k], xr, view)) + ',' + coord(map_y(s.y[k], yr, view));
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color(i)) + "\" stroke-width=\"1.5\" points=\"" +
           points + "\"/>\n";
  }
  if (!series.empty()) out += legend(series, view);
  out += "</svg>\n";
  return out;
}

std::string scatter(const std::vector<Series>& series, const std::string& title, const Viewport& view) {
  std::vector<double> xs, ys;
  collect(series, xs, ys);
  const auto xr = data_range(xs), yr = data_range(ys);
  std::string out = header(view, title) + axes(xr, yr, view, "x", "y");
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    out += "<g fill=\"" + std::string(color(i)) + "\" fill-opacity=\"0.5\">\n";
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      out += "<circle cx=\"" + coord(map_x(s.x[k], xr, view)) + "\" cy=\"" + coord(map_y(s.y[k], yr, view)) +
             "\" r=\"1.5\"/>\n";
    }
    out += "</g>\n";
  }
  if (!series.empty()) out += legend(series, view);
  out += "</svg>\n";
  return out;
}

}  // namespace rgan::plot
