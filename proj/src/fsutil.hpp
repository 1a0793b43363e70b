#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace notana::detail {

// Writes via a sibling temp file and rename(2), so readers never observe a
// partial file. Throws StorageFull (ENOSPC/EDQUOT) or SerializationError.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

// Throws NotFound when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

}  // namespace notana::detail
