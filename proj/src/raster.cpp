#include "notana/raster.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <string>

#include "notana/error.hpp"
#include "notana/kernels.hpp"

namespace notana {

Raster::Raster(int width, int height, Rgba fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw Error(Errc::InvalidArgument, "negative raster dimensions");
  pixels_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 4);
  for (std::size_t i = 0; i < pixels_.size(); i += 4) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
    pixels_[i + 3] = fill.a;
  }
}

Rgba Raster::pixel(int x, int y) const {
  if (!contains(x, y)) throw Error(Errc::OutOfImage, "pixel outside raster");
  const auto* p = &pixels_[(static_cast<std::size_t>(y) * width_ + x) * 4];
  return {p[0], p[1], p[2], p[3]};
}

void Raster::set_pixel(int x, int y, Rgba value) {
  if (!contains(x, y)) return;
  auto* p = &pixels_[(static_cast<std::size_t>(y) * width_ + x) * 4];
  p[0] = value.r;
  p[1] = value.g;
  p[2] = value.b;
  p[3] = value.a;
}

std::span<std::uint8_t> Raster::row(int y) {
  return std::span<std::uint8_t>(pixels_).subspan(static_cast<std::size_t>(y) * width_ * 4,
                                                   static_cast<std::size_t>(width_) * 4);
}

std::span<const std::uint8_t> Raster::row(int y) const {
  return std::span<const std::uint8_t>(pixels_).subspan(static_cast<std::size_t>(y) * width_ * 4,
                                                         static_cast<std::size_t>(width_) * 4);
}

std::vector<std::uint8_t> encode_png(const Raster& raster) {
  if (raster.empty()) throw Error(Errc::PngError, "cannot encode an empty raster");
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raster.width());
  image.height = static_cast<png_uint_32>(raster.height());
  image.format = PNG_FORMAT_RGBA;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, raster.bytes().data(), 0, nullptr)) {
    throw Error(Errc::PngError, image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, raster.bytes().data(), 0, nullptr)) {
    throw Error(Errc::PngError, image.message);
  }
  out.resize(size);
  return out;
}

Raster decode_png(std::span<const std::uint8_t> png) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, png.data(), png.size())) {
    throw Error(Errc::PngError, image.message);
  }
  image.format = PNG_FORMAT_RGBA;
  Raster out(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, out.bytes().data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(Errc::PngError, image.message);
  }
  return out;
}

Raster read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::NotFound, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

void write_png(const std::filesystem::path& path, const Raster& raster) {
  const auto bytes = encode_png(raster);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::StorageFull, "cannot write " + path.string());
}

void composite_over_in_place(Raster& dst, const Raster& src, float opacity) {
  if (!dst.same_size(src)) {
    throw Error(Errc::DimensionMismatch, "layers differ in size",
                {{"dst", {dst.width(), dst.height()}}, {"src", {src.width(), src.height()}}});
  }
  if (!(opacity >= 0.0f && opacity <= 1.0f)) throw Error(Errc::InvalidArgument, "opacity outside [0, 1]");
  if (opacity == 0.0f || dst.empty()) return;
  kernels::blend_over_row(dst.bytes().data(), src.bytes().data(),
                          static_cast<std::size_t>(dst.width()) * static_cast<std::size_t>(dst.height()), opacity);
}

Raster composite_over(const Raster& dst, const Raster& src, float opacity) {
  Raster out = dst;
  composite_over_in_place(out, src, opacity);
  return out;
}

void fill_rect(Raster& raster, int x0, int y0, int x1, int y1, Rgba color) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, raster.width() - 1);
  y1 = std::min(y1, raster.height() - 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) raster.set_pixel(x, y, color);
  }
}

void draw_line(Raster& raster, int x0, int y0, int x1, int y1, Rgba color, int thickness) {
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  const int lo = -(thickness - 1) / 2;
  const int hi = thickness / 2;
  int err = dx + dy;
  while (true) {
    fill_rect(raster, x0 + lo, y0 + lo, x0 + hi, y0 + hi, color);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void draw_circle(Raster& raster, int cx, int cy, int radius, Rgba color, int thickness) {
  const double outer = radius + thickness / 2.0;
  const double inner = radius - thickness / 2.0;
  for (int y = cy - radius - thickness; y <= cy + radius + thickness; ++y) {
    for (int x = cx - radius - thickness; x <= cx + radius + thickness; ++x) {
      const double d = std::hypot(x - cx, y - cy);
      if (d <= outer && d >= inner) raster.set_pixel(x, y, color);
    }
  }
}

namespace {

// Rows top to bottom, 3 bits per row (MSB = left column).
constexpr std::array<std::array<std::uint8_t, 5>, 10> kDigitGlyphs{{
    {0b111, 0b101, 0b101, 0b101, 0b111},
    {0b010, 0b110, 0b010, 0b010, 0b111},
    {0b111, 0b001, 0b111, 0b100, 0b111},
    {0b111, 0b001, 0b111, 0b001, 0b111},
    {0b101, 0b101, 0b111, 0b001, 0b001},
    {0b111, 0b100, 0b111, 0b001, 0b111},
    {0b111, 0b100, 0b111, 0b101, 0b111},
    {0b111, 0b001, 0b010, 0b010, 0b010},
    {0b111, 0b101, 0b111, 0b101, 0b111},
    {0b111, 0b101, 0b111, 0b001, 0b111},
}};

}  // namespace

void draw_digits(Raster& raster, int x, int y, std::string_view digits, Rgba color, int scale) {
  int cursor = x;
  for (char ch : digits) {
    if (ch < '0' || ch > '9') continue;
    const auto& glyph = kDigitGlyphs[static_cast<std::size_t>(ch - '0')];
    for (int gy = 0; gy < 5; ++gy) {
      for (int gx = 0; gx < 3; ++gx) {
        if (glyph[static_cast<std::size_t>(gy)] & (0b100 >> gx)) {
          fill_rect(raster, cursor + gx * scale, y + gy * scale, cursor + (gx + 1) * scale - 1,
                    y + (gy + 1) * scale - 1, color);
        }
      }
    }
    cursor += 4 * scale;
  }
}

}  // namespace notana
