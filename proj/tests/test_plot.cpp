#include <doctest.h>

#include <limits>
#include <string>

#include "rgan/errors.hpp"
#include "rgan/plot.hpp"

using namespace rgan;
using namespace rgan::plot;

namespace {

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("data ranges") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto r = data_range({3, -1, nan, 2});
  CHECK(r.lo == -1);
  CHECK(r.hi == 3);
  r = data_range({2, 2});
  CHECK(r.lo == 1.5);
  CHECK(r.hi == 2.5);
  r = data_range({});
  CHECK(r.lo == 0);
  CHECK(r.hi == 1);
  r = data_range({nan});
  CHECK(r.lo == 0);
  CHECK(r.hi == 1);
}

TEST_CASE("affine mapping onto the default viewport") {
  Viewport v;
  Range xr{0, 20}, yr{0.1, 0.3};
  CHECK(map_x(0, xr, v) == 60);
  CHECK(map_x(20, xr, v) == 620);
  CHECK(map_x(10, xr, v) == 340);
  CHECK(map_y(0.3, yr, v) == doctest::Approx(20));
  CHECK(map_y(0.1, yr, v) == doctest::Approx(440));
  CHECK(map_y(0.2, yr, v) == doctest::Approx(230));
  CHECK(coord(1.0 / 3.0) == "0.333");
}

TEST_CASE("a three-point line chart") {
  Series s{"seed 1", {0, 10, 20}, {0.1, 0.3, 0.2}};
  auto svg = line_chart({s}, "mmd", "step", "mmd");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("points=\"60.000,440.000 340.000,20.000 620.000,230.000\"") != std::string::npos);
  CHECK(count(svg, "<polyline") == 1);
  CHECK(count(svg, "<circle") == 0);
  CHECK(svg.find(">seed 1<") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(line_chart({s}, "mmd", "step", "mmd") == svg);
}

TEST_CASE("non-finite values are skipped and labels escaped") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Series s{"a<b", {0, 1, 2}, {1, nan, 3}};
  auto svg = line_chart({s}, "t & u", "x", "y");
  CHECK(svg.find("points=\"60.000,440.000 620.000,20.000\"") != std::string::npos);
  CHECK(svg.find("a&lt;b") != std::string::npos);
  CHECK(svg.find("t &amp; u") != std::string::npos);
  CHECK_THROWS_AS(line_chart({Series{"bad", {1, 2}, {1}}}, "t", "x", "y"), DimensionError);
}

TEST_CASE("empty charts are still valid documents") {
  auto svg = line_chart({}, "empty", "step", "mmd");
  CHECK(count(svg, "<polyline") == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("scatter draws one circle per finite point") {
  const double inf = std::numeric_limits<double>::infinity();
  Series a{"real", {0, 1, 2, 3}, {0, 1, 0, 1}};
  Series b{"generated", {0.5, inf, 1.5}, {0.5, 0.5, 0.5}};
  auto svg = scatter({a, b}, "samples");
  CHECK(count(svg, "<circle") == 6);
  CHECK(svg.find("cx=\"60.000\" cy=\"440.000\"") != std::string::npos);
}
