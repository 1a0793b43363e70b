#include <cstdlib>
#include <string>

#include "notana/kernels.hpp"

namespace notana::kernels {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "scalar";
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::scalar};
#if defined(NOTANA_HAVE_AVX2)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) out.push_back(Isa::avx2);
#endif
#if defined(NOTANA_HAVE_NEON)
  out.push_back(Isa::neon);
#endif
  return out;
}

BlendRowFn blend_over_row_for(Isa isa) {
  switch (isa) {
#if defined(NOTANA_HAVE_AVX2)
    case Isa::avx2: return &blend_over_row_avx2;
#endif
#if defined(NOTANA_HAVE_NEON)
    case Isa::neon: return &blend_over_row_neon;
#endif
    default: return &blend_over_row_scalar;
  }
}

namespace {

Isa select_isa() {
  const auto available = available_isas();
  if (const char* forced = std::getenv("NOTANA_SIMD")) {
    for (Isa isa : available) {
      if (to_string(isa) == forced) return isa;
    }
  }
  return available.back();
}

}  // namespace

Isa active_isa() {
  static const Isa isa = select_isa();
  return isa;
}

void blend_over_row(std::uint8_t* dst, const std::uint8_t* src, std::size_t pixels, float opacity) {
  static const BlendRowFn fn = blend_over_row_for(active_isa());
  fn(dst, src, pixels, opacity);
}

}  // namespace notana::kernels
