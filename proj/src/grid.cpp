#include "notana/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "notana/error.hpp"

namespace notana {

bool is_grid_component(double v) noexcept {
  if (!(v >= 0.0 && v <= kGridCells)) return false;
  const double twice = v * 2.0;
  return std::abs(twice - std::round(twice)) < 1e-9;
}

bool is_valid(const GridCoord& g) noexcept { return is_grid_component(g.x) && is_grid_component(g.y); }

bool is_valid(const RoiBBox& roi) noexcept {
  return is_grid_component(roi.x_min) && is_grid_component(roi.y_min) && is_grid_component(roi.x_max) &&
         is_grid_component(roi.y_max) && roi.x_min <= roi.x_max && roi.y_min <= roi.y_max;
}

void GridSpec::validate() const {
  if (cells_x <= 0 || cells_y <= 0) throw Error(Errc::InvalidArgument, "grid needs a positive cell count");
  if (image_width_px < cells_x || image_height_px < cells_y) {
    throw Error(Errc::InvalidArgument, "image smaller than one pixel per cell",
                {{"image", {image_width_px, image_height_px}}, {"cells", {cells_x, cells_y}}});
  }
}

namespace {

int to_pixel(double v, int limit) {
  return std::clamp(static_cast<int>(std::lround(v)), 0, limit - 1);
}

void require_match(const Raster& image, const GridSpec& spec) {
  spec.validate();
  if (image.width() != spec.image_width_px || image.height() != spec.image_height_px) {
    throw Error(Errc::DimensionMismatch, "image does not match grid spec",
                {{"image", {image.width(), image.height()}},
                 {"spec", {spec.image_width_px, spec.image_height_px}}});
  }
}

}  // namespace

GridLines grid_lines(const GridSpec& spec) {
  spec.validate();
  GridLines lines;
  for (int i = 0; i <= spec.cells_x; ++i) {
    lines.columns.push_back(to_pixel(i * spec.cell_width(), spec.image_width_px));
  }
  for (int j = 0; j <= spec.cells_y; ++j) {
    lines.rows.push_back(to_pixel(j * spec.cell_height(), spec.image_height_px));
  }
  return lines;
}

double snap_half(double v) noexcept {
  const double twice = v * 2.0;
  const double lower = std::floor(twice);
  const double frac = twice - lower;
  double n = lower;
  if (frac > 0.5) {
    n = lower + 1.0;
  } else if (frac == 0.5 && v < 0.0) {
    n = lower + 1.0;
  }
  return n / 2.0;
}

Raster overlay_grid(const Raster& image, const GridSpec& spec, const GridStyle& style) {
  require_match(image, spec);
  const GridLines lines = grid_lines(spec);
  Raster layer(image.width(), image.height());
  for (int x : lines.columns) fill_rect(layer, x, 0, x, image.height() - 1, style.line_color);
  for (int y : lines.rows) fill_rect(layer, 0, y, image.width() - 1, y, style.line_color);

  const double min_cell = std::min(spec.cell_width(), spec.cell_height());
  if (style.label_stride > 0 && min_cell >= 8.0) {
    const int scale = min_cell >= 20.0 ? 2 : 1;
    const int glyph_h = 5 * scale;
    // x labels along the bottom edge, y labels along the left edge (grid y up).
    for (int i = 0; i < spec.cells_x; i += style.label_stride) {
      draw_digits(layer, lines.columns[static_cast<std::size_t>(i)] + 2, image.height() - 2 - glyph_h,
                  std::to_string(i), style.line_color, scale);
    }
    for (int j = style.label_stride; j < spec.cells_y; j += style.label_stride) {
      const int row = lines.rows[static_cast<std::size_t>(spec.cells_y - j)];
      draw_digits(layer, 2, row - glyph_h - 1, std::to_string(j), style.line_color, scale);
    }
  }
  return composite_over(image, layer, style.opacity);
}

GridCoord pixel_to_grid(double px, double py, const GridSpec& spec) {
  spec.validate();
  if (!(px >= 0.0 && px < spec.image_width_px && py >= 0.0 && py < spec.image_height_px)) {
    throw Error(Errc::OutOfImage, "pixel outside image", {{"px", px}, {"py", py}});
  }
  const double x = snap_half(px / spec.cell_width());
  const double y = snap_half(spec.cells_y - py / spec.cell_height());
  return {std::clamp(x, 0.0, static_cast<double>(spec.cells_x)),
          std::clamp(y, 0.0, static_cast<double>(spec.cells_y))};
}

PixelPoint grid_to_pixel(const GridCoord& g, const GridSpec& spec) {
  spec.validate();
  return {to_pixel(g.x * spec.cell_width(), spec.image_width_px),
          to_pixel((spec.cells_y - g.y) * spec.cell_height(), spec.image_height_px)};
}

PixelRect roi_to_pixel_rect(const RoiBBox& roi, const GridSpec& spec) {
  const PixelPoint a = grid_to_pixel({roi.x_min, roi.y_min}, spec);
  const PixelPoint b = grid_to_pixel({roi.x_max, roi.y_max}, spec);
  return {std::min(a.x, b.x), std::min(a.y, b.y), std::max(a.x, b.x), std::max(a.y, b.y)};
}

}  // namespace notana
