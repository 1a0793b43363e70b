#include <immintrin.h>

#include "notana/kernels.hpp"

namespace notana::kernels {

namespace {

inline __m256 channel(__m256i px, int shift) {
  return _mm256_cvtepi32_ps(_mm256_and_si256(_mm256_srli_epi32(px, shift), _mm256_set1_epi32(0xFF)));
}

inline __m256i to_byte(__m256 v) {
  return _mm256_cvttps_epi32(_mm256_min_ps(_mm256_add_ps(v, _mm256_set1_ps(0.5f)), _mm256_set1_ps(255.0f)));
}

}  // namespace

void blend_over_row_avx2(std::uint8_t* dst, const std::uint8_t* src, std::size_t pixels, float opacity) {
  const __m256 k = _mm256_set1_ps(opacity * (1.0f / 255.0f));
  const __m256 inv255 = _mm256_set1_ps(1.0f / 255.0f);
  const __m256 one = _mm256_set1_ps(1.0f);
  const __m256 v255 = _mm256_set1_ps(255.0f);
  const __m256 zero = _mm256_setzero_ps();

  std::size_t i = 0;
  for (; i + 8 <= pixels; i += 8) {
    auto* dp = reinterpret_cast<__m256i*>(dst + 4 * i);
    const __m256i d = _mm256_loadu_si256(dp);
    const __m256i s = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src + 4 * i));

    const __m256 sa = _mm256_mul_ps(channel(s, 24), k);
    const __m256 keep = _mm256_cmp_ps(sa, zero, _CMP_EQ_OQ);
    if (_mm256_movemask_ps(keep) == 0xFF) continue;

    const __m256 da = _mm256_mul_ps(channel(d, 24), inv255);
    const __m256 t = _mm256_mul_ps(da, _mm256_sub_ps(one, sa));
    const __m256 oa = _mm256_add_ps(sa, t);

    __m256i out = _mm256_slli_epi32(to_byte(_mm256_mul_ps(oa, v255)), 24);
    for (int c = 0; c < 3; ++c) {
      const int shift = 8 * c;
      const __m256 v = _mm256_div_ps(
          _mm256_add_ps(_mm256_mul_ps(channel(s, shift), sa), _mm256_mul_ps(channel(d, shift), t)), oa);
      out = _mm256_or_si256(out, _mm256_slli_epi32(to_byte(v), shift));
    }
    // Lanes with zero source alpha keep the destination pixel untouched.
    out = _mm256_castps_si256(_mm256_blendv_ps(_mm256_castsi256_ps(out), _mm256_castsi256_ps(d), keep));
    _mm256_storeu_si256(dp, out);
  }
  if (i < pixels) blend_over_row_scalar(dst + 4 * i, src + 4 * i, pixels - i, opacity);
}

}  // namespace notana::kernels
