#include <doctest.h>

#include <fstream>

#include "notana/demo.hpp"
#include "notana/digest.hpp"
#include "support.hpp"

using namespace notana;
namespace fs = std::filesystem;

namespace {

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("every built-in example runs end to end") {
  CHECK(demo_examples() == std::vector<std::string>{"run", "cubes", "splash"});
  for (const auto& name : demo_examples()) {
    CAPTURE(name);
    const DemoReport r = run_demo(name);
    const Workspace& ws = r.workspace;
    REQUIRE(ws.interpretation);
    REQUIRE(ws.timeline);
    CHECK(r.interpreter_calls == 2);
    CHECK(ws.frames.size() == r.prompts.size());
    CHECK(frame_chain_violations(ws.frames).empty());
    CHECK(timeline_violations(*ws.timeline).empty());
    CHECK(stamp_chain_violations(generation_base(ws), ws.frames).empty());
    for (const auto& m : ws.timeline->markers) {
      if (!m.orphaned) CHECK(m.status == MarkerStatus::generated);
    }
    CHECK(keyframe_schedule(*ws.timeline).empty());
    validate(ws);
  }
}

TEST_CASE("the run example matches its fixture") {
  const DemoReport r = run_demo("run");
  const Workspace& ws = r.workspace;
  CHECK(ws.timeline->blocks.size() == 7);
  CHECK(ws.timeline->tracks.size() == 7);
  CHECK(ws.frames.size() == 3);
  CHECK(ws.interpretation->units.size() == 2);
  CHECK(ws.interpretation->units[0].tag_color == "#f58231");
  CHECK(ws.drawing_layer.width() == 300);
  for (const auto& f : ws.frames) CHECK(f.prompt_digest == sha256_hex(f.prompt_text));
}

TEST_CASE("demo runs are byte-for-byte reproducible") {
  for (const auto& name : demo_examples()) {
    CAPTURE(name);
    test::TempDir a;
    test::TempDir b;
    write_demo(run_demo(name), a.path());
    write_demo(run_demo(name), b.path());
    for (const char* f : {"manifest.json", "result.json", "prompts.json", "drawing.png", "notation.png",
                          "frames/0.png", "frames/1.png", "frames/2.png"}) {
      CAPTURE(f);
      REQUIRE(fs::exists(a / f));
      CHECK(read_all(a / f) == read_all(b / f));
    }
    CHECK(parse_interpretation(read_all(a / "result.json")) == *run_demo(name).workspace.interpretation);
  }
}

TEST_CASE("unknown examples and shapes are rejected") {
  CHECK(test::error_code_of([] { run_demo("nope"); }) == Errc::NotFound);
  CHECK(test::error_code_of([] { demo_interpreter("nope"); }) == Errc::NotFound);
  CHECK(test::error_code_of([] { render_shapes({{{"kind", "blob"}}}, 4, 4); }) == Errc::InvalidArgument);
  const Raster r = render_shapes(
      {{{"kind", "rect"}, {"from", {1, 1}}, {"to", {6, 6}}, {"color", "#ff0000"}, {"width", 1}}}, 8, 8);
  CHECK(r.pixel(1, 1) == Rgba{255, 0, 0, 255});
  CHECK(r.pixel(3, 3).a == 0);
}

TEST_CASE("stamp chain checks catch a swapped frame") {
  DemoReport r = run_demo("cubes");
  auto frames = r.workspace.frames;
  std::swap(frames[0].image, frames[1].image);
  CHECK_FALSE(stamp_chain_violations(generation_base(r.workspace), frames).empty());
  frames[2].status = FrameStatus::pending;
  CHECK_FALSE(stamp_chain_violations(generation_base(r.workspace), frames).empty());
}
