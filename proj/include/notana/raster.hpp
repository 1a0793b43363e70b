#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace notana {

struct Rgba {
  std::uint8_t r = 0, g = 0, b = 0, a = 0;
  friend bool operator==(const Rgba&, const Rgba&) = default;
};

// 8-bit RGBA, straight (non-premultiplied) alpha, row-major, top-left origin.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, Rgba fill = {});

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }
  bool same_size(const Raster& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  Rgba pixel(int x, int y) const;
  void set_pixel(int x, int y, Rgba value);
  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::span<std::uint8_t> row(int y);
  std::span<const std::uint8_t> row(int y) const;
  std::span<const std::uint8_t> bytes() const noexcept { return pixels_; }
  std::span<std::uint8_t> bytes() noexcept { return pixels_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// PNG codec. Encoding is deterministic for a given raster.
std::vector<std::uint8_t> encode_png(const Raster& raster);
Raster decode_png(std::span<const std::uint8_t> png);
Raster read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Raster& raster);

// Returns dst with src composited over it ("over" operator), src alpha scaled
// by opacity in [0, 1]. Throws DimensionMismatch / InvalidArgument.
Raster composite_over(const Raster& dst, const Raster& src, float opacity = 1.0f);
void composite_over_in_place(Raster& dst, const Raster& src, float opacity = 1.0f);

// Minimal drawing helpers used by the grid overlay and demo fixtures.
void fill_rect(Raster& raster, int x0, int y0, int x1, int y1, Rgba color);
void draw_line(Raster& raster, int x0, int y0, int x1, int y1, Rgba color, int thickness = 1);
void draw_circle(Raster& raster, int cx, int cy, int radius, Rgba color, int thickness = 1);
// 3x5 bitmap digits scaled by `scale`; non-digit characters are skipped.
void draw_digits(Raster& raster, int x, int y, std::string_view digits, Rgba color, int scale = 1);

}  // namespace notana
