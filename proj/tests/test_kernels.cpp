#include <doctest.h>

#include <random>

#include "notana/kernels.hpp"

using namespace notana::kernels;

namespace {

std::vector<std::uint8_t> random_bytes(std::size_t n, std::mt19937& rng) {
  std::vector<std::uint8_t> v(n);
  for (auto& b : v) b = static_cast<std::uint8_t>(rng());
  return v;
}

// Alpha values that exercise the early-out and saturation paths.
void salt_alpha(std::vector<std::uint8_t>& px, std::mt19937& rng) {
  static constexpr std::uint8_t special[] = {0, 1, 254, 255};
  for (std::size_t i = 3; i < px.size(); i += 4) {
    if (rng() % 3 == 0) px[i] = special[rng() % 4];
  }
}

}  // namespace

TEST_CASE("scalar is always available and listed first") {
  const auto isas = available_isas();
  REQUIRE_FALSE(isas.empty());
  CHECK(isas.front() == Isa::scalar);
  const auto active = active_isa();
  CHECK(std::find(isas.begin(), isas.end(), active) != isas.end());
}

TEST_CASE("every available variant is bit-identical to scalar") {
  std::mt19937 rng(11);
  for (Isa isa : available_isas()) {
    CAPTURE(to_string(isa));
    const BlendRowFn fn = blend_over_row_for(isa);
    for (std::size_t pixels : {0u, 1u, 3u, 7u, 8u, 9u, 15u, 16u, 17u, 257u}) {
      for (float opacity : {0.0f, 0.003f, 0.35f, 0.5f, 0.999f, 1.0f}) {
        auto src = random_bytes(pixels * 4, rng);
        auto dst = random_bytes(pixels * 4, rng);
        salt_alpha(src, rng);
        salt_alpha(dst, rng);
        auto expected = dst;
        blend_over_row_scalar(expected.data(), src.data(), pixels, opacity);
        fn(dst.data(), src.data(), pixels, opacity);
        CHECK(dst == expected);
      }
    }
  }
}

TEST_CASE("dispatch entry point matches the active variant") {
  std::mt19937 rng(12);
  auto src = random_bytes(4 * 100, rng);
  auto a = random_bytes(4 * 100, rng);
  auto b = a;
  blend_over_row(a.data(), src.data(), 100, 0.7f);
  blend_over_row_for(active_isa())(b.data(), src.data(), 100, 0.7f);
  CHECK(a == b);
}

TEST_CASE("transparent source pixels leave the destination untouched") {
  std::mt19937 rng(13);
  auto src = random_bytes(4 * 40, rng);
  for (std::size_t i = 3; i < src.size(); i += 4) src[i] = 0;
  auto dst = random_bytes(4 * 40, rng);
  const auto before = dst;
  for (Isa isa : available_isas()) {
    blend_over_row_for(isa)(dst.data(), src.data(), 40, 1.0f);
    CHECK(dst == before);
  }
}
