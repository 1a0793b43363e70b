#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace notana {

// Replaces each `{name}` whose name is a key of `slots`. Braces that do not
// form a known slot (including "{ source, path, target }") are left verbatim.
std::string render_template(std::string_view tpl, const std::map<std::string, std::string, std::less<>>& slots);

// Versioned prompt assets shipped with the library.
inline constexpr std::string_view kInterpretPrompt = "prompts/interpret_v1.txt";
inline constexpr std::string_view kDecomposePrompt = "prompts/decompose_v1.txt";
inline constexpr std::string_view kFramePrompt = "prompts/frame_v1.txt";
inline constexpr std::string_view kPolishPrompt = "prompts/polish_v1.txt";

// Loads a prompt template by asset id. When `override_dir` holds a file with
// the same relative name it wins over the built-in copy. Throws NotFound.
std::string load_prompt_template(std::string_view id, const std::optional<std::filesystem::path>& override_dir = {});

}  // namespace notana
