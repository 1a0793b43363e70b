#pragma once

// Shared helpers for the unit and acceptance tests.

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "notana/assets.hpp"
#include "notana/backend.hpp"
#include "notana/error.hpp"
#include "notana/intent.hpp"
#include "notana/raster.hpp"
#include "notana/timeline.hpp"
#include "notana/workspace.hpp"

namespace notana::test {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("notana-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string asset(const std::string& name) {
  const auto text = assets::find(name);
  if (!text) throw Error(Errc::NotFound, "missing asset " + name);
  return std::string(*text);
}

// The built-in character-run fixture (two units with one slider each).
inline InterpretationResult run_result() { return parse_interpretation(asset("demos/run/interpretation.json")); }

// Runs `fn` and returns the error code it threw, or nullopt.
template <typename Fn>
std::optional<Errc> error_code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline Raster noise_raster(int w, int h, std::mt19937& rng) {
  Raster r(w, h);
  std::uniform_int_distribution<int> byte(0, 255);
  for (auto& b : r.bytes()) b = static_cast<std::uint8_t>(byte(rng));
  return r;
}

// Always answers with a fixed-size solid image; optionally fails on call N.
class CountingImageBackend final : public ImageBackend {
 public:
  explicit CountingImageBackend(int fail_on_call = -1) : fail_on_call_(fail_on_call) {}
  Raster generate_image(const Raster& image, std::string_view prompt) override {
    const int call = calls++;
    if (call == fail_on_call_) throw Error(Errc::GenerationRejected, "refused", {{"reason", "policy"}});
    Raster out = image;
    const auto shade = static_cast<std::uint8_t>(prompt.size() % 251);
    if (!out.empty()) out.set_pixel(0, 0, {shade, static_cast<std::uint8_t>(call), 7, 255});
    return out;
  }
  int calls = 0;

 private:
  int fail_on_call_;
};

// A valid workspace with randomized layers, edits, sliders, timeline and frames.
inline Workspace random_workspace(const std::string& id, std::mt19937& rng) {
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const int w = uni(8, 40);
  const int h = uni(8, 40);
  Workspace ws = Workspace::blank(id, w, h, "2026-01-0" + std::to_string(uni(1, 9)) + "T10:00:00Z");
  ws.modified_at = "2026-02-1" + std::to_string(uni(0, 9)) + "T08:30:00Z";
  ws.drawing_layer = noise_raster(w, h, rng);
  if (uni(0, 1) == 1) ws.notation_layer = noise_raster(w, h, rng);
  ws.brush.mode = uni(0, 1) == 1 ? BrushMode::notation : BrushMode::drawing;
  ws.brush.size = std::uniform_real_distribution<double>(0.5, 40.0)(rng);
  ws.brush.color = "#" + std::to_string(100000 + uni(0, 899999));
  ws.generate_with_notations = uni(0, 1) == 1;
  if (uni(0, 4) == 0) return ws;

  InterpretationResult r = run_result();
  r.units[0].tag_color = "#f58231";
  r.units[1].tag_color = "#3cb44b";
  r = set_slider(r, "body_run", "stride", std::uniform_real_distribution<double>(0.0, 2.0)(rng));
  if (uni(0, 1) == 1) {
    UnitEdit e;
    e.summary = "sprints \u00e9 \"fast\" " + std::to_string(uni(0, 999));
    r = apply_unit_edit(r, "hair_drag", e);
  }
  r.extras["note"] = uni(0, 1000);
  ws.interpretation = r;

  Timeline tl = build_timeline(r, parse_decomposition(asset("demos/run/decomposition.json")));
  for (int k = 0; k < uni(0, 6); ++k) {
    const std::string bid = tl.blocks[static_cast<std::size_t>(uni(0, static_cast<int>(tl.blocks.size()) - 1))].id;
    tl = uni(0, 1) == 1 ? move_block(tl, bid, uni(0, 12) / 4.0) : resize_block(tl, bid, uni(1, 12) / 4.0);
  }
  tl.beat_duration_hint = uni(1, 8) / 8.0;

  const int n = uni(0, 4);
  const int done = uni(0, n);
  for (int i = 0; i < n; ++i) {
    FrameRecord f;
    f.index = i;
    f.frame_id = "f" + std::to_string(i);
    f.parent_frame_id = i == 0 ? "base" : "f" + std::to_string(i - 1);
    f.marker_id = "k" + std::to_string(i + 1);
    f.prompt_text = "prompt " + std::to_string(uni(0, 1 << 20));
    f.prompt_digest = std::string(64, 'a');
    if (i < done) {
      f.status = FrameStatus::done;
      f.image = noise_raster(w, h, rng);
    } else if (i == done && uni(0, 1) == 1) {
      f.status = FrameStatus::failed;
      f.error = Error(Errc::GenerationRejected, "refused", {{"index", i}}).to_json();
    }
    ws.frames.push_back(std::move(f));
  }
  ws.timeline = tl;
  return ws;
}

}  // namespace notana::test
