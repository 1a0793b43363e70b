#include <algorithm>

#include "notana/kernels.hpp"

namespace notana::kernels {

void blend_over_row_scalar(std::uint8_t* dst, const std::uint8_t* src, std::size_t pixels, float opacity) {
  const float k = opacity * (1.0f / 255.0f);
  const float inv255 = 1.0f / 255.0f;
  for (std::size_t i = 0; i < pixels; ++i) {
    std::uint8_t* d = dst + 4 * i;
    const std::uint8_t* s = src + 4 * i;
    const float sa = static_cast<float>(s[3]) * k;
    if (sa == 0.0f) continue;
    const float da = static_cast<float>(d[3]) * inv255;
    const float t = da * (1.0f - sa);
    const float oa = sa + t;
    for (int c = 0; c < 3; ++c) {
      const float v = (static_cast<float>(s[c]) * sa + static_cast<float>(d[c]) * t) / oa;
      d[c] = static_cast<std::uint8_t>(static_cast<int>(std::min(v + 0.5f, 255.0f)));
    }
    d[3] = static_cast<std::uint8_t>(static_cast<int>(std::min(oa * 255.0f + 0.5f, 255.0f)));
  }
}

}  // namespace notana::kernels
