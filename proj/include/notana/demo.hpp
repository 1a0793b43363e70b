#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "notana/prompt.hpp"
#include "notana/workspace.hpp"

// Built-in end-to-end examples (character run, cube stack, water splash).
// Everything runs against the scripted interpreter and the digest stamper, so
// results are byte-for-byte reproducible and never touch the network.
namespace notana {

const std::vector<std::string>& demo_examples();

struct DemoReport {
  std::string example;
  Workspace workspace;
  std::vector<FramePrompt> prompts;
  std::size_t interpreter_calls = 0;
};

// Throws NotFound for an unknown example and InvalidArgument when the
// fixture's expectations (block or frame counts, stamp chain) do not hold.
DemoReport run_demo(std::string_view example);

class ScriptedInterpreter;

// Scripted interpreter answering the example's interpretation and
// decomposition prompts.
std::unique_ptr<ScriptedInterpreter> demo_interpreter(std::string_view example);

// Writes result.json, prompts.json, manifest.json, drawing.png, notation.png
// and frames/<index>.png into `out_dir`.
void write_demo(const DemoReport& report, const std::filesystem::path& out_dir);

// Rasterizes a list of {"kind": line|circle|rect, ...} shapes onto a
// transparent canvas.
Raster render_shapes(const nlohmann::json& shapes, int width, int height);

// Checks that `base` carries no stamps and every done frame i carries exactly
// the digests of prompts 0..i in order.
std::vector<std::string> stamp_chain_violations(const Raster& base, const std::vector<FrameRecord>& records);

}  // namespace notana
