#pragma once

#include <string>
#include <vector>

// Self-contained SVG charts. Data coordinates map affinely onto the plot
// area of the viewport:
//
//   px = left + (x - x_lo) / (x_hi - x_lo) * (width - left - right)
//   py = top  + (y_hi - y) / (y_hi - y_lo) * (height - top - bottom)
//
// Coordinates are written with three decimals. Only scatter points use
// <circle> elements.
namespace rgan::plot {

struct Viewport {
  double width = 640.0;
  double height = 480.0;
  double left = 60.0;
  double right = 20.0;
  double top = 20.0;
  double bottom = 40.0;
};

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

/// Min/max of the finite values; a single value v becomes [v - 0.5, v + 0.5]
/// and no values give [0, 1].
Range data_range(const std::vector<double>& values);

double map_x(double x, const Range& r, const Viewport& v);
double map_y(double y, const Range& r, const Viewport& v);

/// Fixed three-decimal formatting used for every coordinate.
std::string coord(double v);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// One polyline per series (non-finite points are skipped), axes with tick
/// labels, and a legend.
std::string line_chart(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                       const std::string& y_label, const Viewport& view = {});

/// One circle per finite point.
std::string scatter(const std::vector<Series>& series, const std::string& title, const Viewport& view = {});

}  // namespace rgan::plot
