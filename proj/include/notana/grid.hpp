#pragma once

#include <vector>

#include "notana/coords.hpp"
#include "notana/raster.hpp"

namespace notana {

struct GridSpec {
  int cells_x = kGridCells;
  int cells_y = kGridCells;
  int image_width_px = 0;
  int image_height_px = 0;

  static GridSpec for_image(const Raster& image) { return {kGridCells, kGridCells, image.width(), image.height()}; }

  double cell_width() const noexcept { return static_cast<double>(image_width_px) / cells_x; }
  double cell_height() const noexcept { return static_cast<double>(image_height_px) / cells_y; }
  // Throws InvalidArgument unless cells are positive and at least 1 px.
  void validate() const;
};

struct GridStyle {
  Rgba line_color{0, 0, 0, 255};
  float opacity = 0.35f;
  int label_stride = 5;  // 0 disables labels
};

struct PixelPoint {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

// Inclusive pixel rectangle.
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  friend bool operator==(const PixelRect&, const PixelRect&) = default;

  bool contains(const PixelPoint& p) const noexcept { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  bool contains(const PixelRect& r) const noexcept { return r.x0 >= x0 && r.x1 <= x1 && r.y0 >= y0 && r.y1 <= y1; }
};

// Pixel column of each vertical boundary (cells_x + 1 entries) and pixel row of
// each horizontal boundary (cells_y + 1 entries, listed top to bottom).
struct GridLines {
  std::vector<int> columns;
  std::vector<int> rows;
};
GridLines grid_lines(const GridSpec& spec);

// Nearest multiple of 0.5; exact ties go toward zero.
double snap_half(double v) noexcept;

Raster overlay_grid(const Raster& image, const GridSpec& spec, const GridStyle& style = {});

// Pixel (top-left origin, y down) to grid (bottom-left origin, y up).
GridCoord pixel_to_grid(double px, double py, const GridSpec& spec);
PixelPoint grid_to_pixel(const GridCoord& g, const GridSpec& spec);
PixelRect roi_to_pixel_rect(const RoiBBox& roi, const GridSpec& spec);

}  // namespace notana
