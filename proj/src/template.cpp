#include "notana/template.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "notana/assets.hpp"
#include "notana/error.hpp"

namespace notana {

std::string render_template(std::string_view tpl, const std::map<std::string, std::string, std::less<>>& slots) {
  std::string out;
  out.reserve(tpl.size());
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tpl.size() && (std::islower(static_cast<unsigned char>(tpl[j])) || tpl[j] == '_')) ++j;
      if (j < tpl.size() && tpl[j] == '}' && j > i + 1) {
        auto it = slots.find(tpl.substr(i + 1, j - i - 1));
        if (it != slots.end()) {
          out += it->second;
          i = j + 1;
          continue;
        }
      }
    }
    out.push_back(tpl[i]);
    ++i;
  }
  return out;
}

std::string load_prompt_template(std::string_view id, const std::optional<std::filesystem::path>& override_dir) {
  if (override_dir) {
    const auto path = *override_dir / std::filesystem::path(std::string(id)).filename();
    if (std::ifstream in(path, std::ios::binary); in) {
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    }
  }
  if (auto text = assets::find(id)) return std::string(*text);
  throw Error(Errc::NotFound, "no prompt template '" + std::string(id) + "'");
}

}  // namespace notana
