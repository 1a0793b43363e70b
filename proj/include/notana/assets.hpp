#pragma once

#include <optional>
#include <string_view>
#include <vector>

// Text assets compiled into the library (prompt templates, demo fixtures).
namespace notana::assets {

std::optional<std::string_view> find(std::string_view name);
std::vector<std::string_view> names();

}  // namespace notana::assets
