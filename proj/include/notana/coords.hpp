#pragma once

namespace notana {

// The interpreter reasons on a fixed 30x30 grid, origin bottom-left, y up.
inline constexpr int kGridCells = 30;

// A grid position in grid units, quantized to half cells.
struct GridCoord {
  double x = 0;
  double y = 0;
  friend bool operator==(const GridCoord&, const GridCoord&) = default;
};

struct RoiBBox {
  double x_min = 0;
  double y_min = 0;
  double x_max = 0;
  double y_max = 0;
  friend bool operator==(const RoiBBox&, const RoiBBox&) = default;

  bool contains(const GridCoord& g) const noexcept {
    return g.x >= x_min && g.x <= x_max && g.y >= y_min && g.y <= y_max;
  }
  bool contains(const RoiBBox& other) const noexcept {
    return other.x_min >= x_min && other.x_max <= x_max && other.y_min >= y_min && other.y_max <= y_max;
  }
};

// In [0, 30] and a multiple of 0.5.
bool is_grid_component(double v) noexcept;
bool is_valid(const GridCoord& g) noexcept;
bool is_valid(const RoiBBox& roi) noexcept;

}  // namespace notana
