#include <arm_neon.h>

#include "notana/kernels.hpp"

namespace notana::kernels {

namespace {

inline float32x4_t channel(uint32x4_t px, int shift) {
  return vcvtq_f32_u32(vandq_u32(vshlq_u32(px, vdupq_n_s32(-shift)), vdupq_n_u32(0xFF)));
}

inline uint32x4_t to_byte(float32x4_t v) {
  return vcvtq_u32_f32(vminq_f32(vaddq_f32(v, vdupq_n_f32(0.5f)), vdupq_n_f32(255.0f)));
}

}  // namespace

void blend_over_row_neon(std::uint8_t* dst, const std::uint8_t* src, std::size_t pixels, float opacity) {
  const float32x4_t k = vdupq_n_f32(opacity * (1.0f / 255.0f));
  const float32x4_t inv255 = vdupq_n_f32(1.0f / 255.0f);
  const float32x4_t one = vdupq_n_f32(1.0f);
  const float32x4_t v255 = vdupq_n_f32(255.0f);

  std::size_t i = 0;
  for (; i + 4 <= pixels; i += 4) {
    auto* dp = reinterpret_cast<std::uint32_t*>(dst + 4 * i);
    const uint32x4_t d = vld1q_u32(dp);
    const uint32x4_t s = vld1q_u32(reinterpret_cast<const std::uint32_t*>(src + 4 * i));

    const float32x4_t sa = vmulq_f32(channel(s, 24), k);
    const uint32x4_t keep = vceqq_f32(sa, vdupq_n_f32(0.0f));
    const float32x4_t da = vmulq_f32(channel(d, 24), inv255);
    const float32x4_t t = vmulq_f32(da, vsubq_f32(one, sa));
    const float32x4_t oa = vaddq_f32(sa, t);

    uint32x4_t out = vshlq_n_u32(to_byte(vmulq_f32(oa, v255)), 24);
    for (int c = 0; c < 3; ++c) {
      const int shift = 8 * c;
      const float32x4_t v =
          vdivq_f32(vaddq_f32(vmulq_f32(channel(s, shift), sa), vmulq_f32(channel(d, shift), t)), oa);
      out = vorrq_u32(out, vshlq_u32(to_byte(v), vdupq_n_s32(shift)));
    }
    vst1q_u32(dp, vbslq_u32(keep, d, out));
  }
  if (i < pixels) blend_over_row_scalar(dst + 4 * i, src + 4 * i, pixels - i, opacity);
}

}  // namespace notana::kernels
