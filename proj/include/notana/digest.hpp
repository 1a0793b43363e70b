#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace notana {

using Sha256 = std::array<std::uint8_t, 32>;

Sha256 sha256(std::span<const std::uint8_t> bytes);
Sha256 sha256(std::string_view text);
std::string to_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_hex(std::span<const std::uint8_t> bytes);

// Incremental hashing for multi-part request digests.
class Sha256Builder {
 public:
  Sha256Builder();
  ~Sha256Builder();
  Sha256Builder(const Sha256Builder&) = delete;
  Sha256Builder& operator=(const Sha256Builder&) = delete;

  Sha256Builder& update(std::span<const std::uint8_t> bytes);
  Sha256Builder& update(std::string_view text);
  Sha256 finish();

 private:
  void* ctx_;
};

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws Error(InvalidArgument) on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace notana
