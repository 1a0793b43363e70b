#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

// Row kernels for straight-alpha RGBA8 "over" compositing.
//
// Every variant evaluates the same float expression in the same order, with
// no fused multiply-add, so all variants are bit-identical:
//
//   sa = src.a * (opacity / 255)          if sa == 0 the dst pixel is kept
//   da = dst.a / 255
//   t  = da * (1 - sa)
//   oa = sa + t
//   c  = (src.c * sa + dst.c * t) / oa    for c in r, g, b
//   out.c = trunc(min(c + 0.5, 255)),  out.a = trunc(min(oa * 255 + 0.5, 255))
namespace notana::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa);

using BlendRowFn = void (*)(std::uint8_t* dst, const std::uint8_t* src, std::size_t pixels, float opacity);

void blend_over_row_scalar(std::uint8_t* dst, const std::uint8_t* src, std::size_t pixels, float opacity);
#if defined(NOTANA_HAVE_AVX2)
void blend_over_row_avx2(std::uint8_t* dst, const std::uint8_t* src, std::size_t pixels, float opacity);
#endif
#if defined(NOTANA_HAVE_NEON)
void blend_over_row_neon(std::uint8_t* dst, const std::uint8_t* src, std::size_t pixels, float opacity);
#endif

// Variants compiled in and supported by the running CPU; scalar is always first.
std::vector<Isa> available_isas();
BlendRowFn blend_over_row_for(Isa isa);

// Selected once at first use: the widest available ISA, unless the
// NOTANA_SIMD environment variable names another one ("scalar", "avx2", "neon").
Isa active_isa();
void blend_over_row(std::uint8_t* dst, const std::uint8_t* src, std::size_t pixels, float opacity);

}  // namespace notana::kernels
