#include <doctest.h>

#include <cmath>
#include <random>

#include "notana/grid.hpp"
#include "support.hpp"

using namespace notana;

namespace {

// Nearest half-multiple by brute-force search; ties go to the smaller magnitude.
double snap_oracle(double v) {
  double best = 0;
  double best_err = INFINITY;
  const double base = std::floor(v * 2) / 2;
  for (double c : {base - 0.5, base, base + 0.5, base + 1.0}) {
    const double err = std::abs(c - v);
    if (err < best_err || (err == best_err && std::abs(c) < std::abs(best))) {
      best = c;
      best_err = err;
    }
  }
  return best;
}

GridSpec spec_for(int w, int h) { return {kGridCells, kGridCells, w, h}; }

}  // namespace

TEST_CASE("snap_half matches the brute-force oracle") {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> dist(-40.0, 40.0);
  for (int i = 0; i < 20000; ++i) {
    const double v = dist(rng);
    CHECK(snap_half(v) == snap_oracle(v));
  }
  CHECK(snap_half(0.25) == 0.0);
  CHECK(snap_half(0.75) == 0.5);
  CHECK(snap_half(-0.25) == 0.0);
  CHECK(snap_half(-0.75) == -0.5);
  CHECK(snap_half(2.74) == 2.5);
  CHECK(snap_half(2.76) == 3.0);
}

TEST_CASE("grid components are half steps in [0, 30]") {
  CHECK(is_grid_component(0));
  CHECK(is_grid_component(30));
  CHECK(is_grid_component(14.5));
  CHECK_FALSE(is_grid_component(14.25));
  CHECK_FALSE(is_grid_component(-0.5));
  CHECK_FALSE(is_grid_component(30.5));
  CHECK_FALSE(is_grid_component(NAN));
  CHECK(is_valid(RoiBBox{1, 2, 3, 4}));
  CHECK_FALSE(is_valid(RoiBBox{3, 2, 1, 4}));
}

TEST_CASE("grid origin is bottom-left with y up") {
  const GridSpec s = spec_for(300, 300);
  CHECK(grid_to_pixel({0, 0}, s) == PixelPoint{0, 299});
  CHECK(grid_to_pixel({30, 30}, s) == PixelPoint{299, 0});
  CHECK(grid_to_pixel({15, 15}, s) == PixelPoint{150, 150});
  CHECK(pixel_to_grid(0, 299, s) == GridCoord{0, 0});
  CHECK(pixel_to_grid(10, 10, s) == GridCoord{1, 29});
  CHECK(test::error_code_of([&] { pixel_to_grid(300, 0, s); }) == Errc::OutOfImage);
  CHECK(test::error_code_of([&] { pixel_to_grid(-1, 0, s); }) == Errc::OutOfImage);
}

TEST_CASE("every half-step intersection round-trips") {
  for (auto [w, h] : {std::pair{300, 300}, {900, 900}, {640, 480}, {1920, 1080}}) {
    const GridSpec s = spec_for(w, h);
    int failures = 0;
    for (int i = 0; i <= 60; ++i) {
      for (int j = 0; j <= 60; ++j) {
        const GridCoord g{i / 2.0, j / 2.0};
        const PixelPoint p = grid_to_pixel(g, s);
        if (!(p.x >= 0 && p.x < w && p.y >= 0 && p.y < h) || pixel_to_grid(p.x, p.y, s) != g) ++failures;
      }
    }
    CAPTURE(w);
    CAPTURE(h);
    CHECK(failures == 0);
  }
}

TEST_CASE("roi rectangles nest like their grid boxes") {
  const GridSpec s = spec_for(640, 480);
  const RoiBBox outer{2, 2, 20, 25.5};
  const RoiBBox inner{4.5, 3, 10, 25};
  REQUIRE(outer.contains(inner));
  const PixelRect po = roi_to_pixel_rect(outer, s);
  const PixelRect pi = roi_to_pixel_rect(inner, s);
  CHECK(po.contains(pi));
  CHECK(po.x0 <= po.x1);
  CHECK(po.y0 <= po.y1);
}

TEST_CASE("grid lines and overlay") {
  const GridSpec s = spec_for(300, 300);
  const GridLines lines = grid_lines(s);
  REQUIRE(lines.columns.size() == 31);
  REQUIRE(lines.rows.size() == 31);
  CHECK(lines.columns[1] == 10);
  CHECK(lines.columns.back() == 299);

  const Raster white(300, 300, {255, 255, 255, 255});
  const Raster out = overlay_grid(white, s);
  CHECK(out.pixel(10, 5) != white.pixel(10, 5));  // on a line
  CHECK(out.pixel(15, 15) == white.pixel(15, 15));  // mid-cell, away from labels
  CHECK(test::error_code_of([&] { overlay_grid(Raster(200, 300), s); }) == Errc::DimensionMismatch);
  CHECK(test::error_code_of([] { grid_lines(spec_for(20, 300)); }) == Errc::InvalidArgument);
}
