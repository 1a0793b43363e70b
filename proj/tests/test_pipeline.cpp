#include <doctest.h>

#include <set>

#include "notana/pipeline.hpp"
#include "support.hpp"

using namespace notana;
using nlohmann::json;

namespace {

const Raster kDrawing = [] {
  Raster r(60, 60);
  draw_line(r, 5, 5, 50, 50, {0, 0, 0, 255}, 2);
  return r;
}();
const Raster kNotes = [] {
  Raster r(60, 60);
  draw_line(r, 5, 50, 50, 5, {255, 0, 0, 255}, 2);
  return r;
}();

std::string unit_reply(const std::vector<std::string>& ids, bool with_colors = false) {
  json units = json::array();
  int n = 0;
  for (const auto& id : ids) {
    json u = {{"id", id},
              {"roi_bbox", {1, 1, 10, 10}},
              {"primary", {{"source", id + " part"}, {"path", "arc"}, {"target", "rest"}}},
              {"confidence", 0.6},
              {"natural_language_summary", id + " moves."},
              {"sliders", {{{"id", "amp"}, {"label", "Amount"}}}}};
    if (with_colors) u["color"] = "#00000" + std::to_string(n++);
    units.push_back(u);
  }
  return "Result:\n" + json{{"units", units}}.dump();
}

std::string default_prompt() {
  return render_template(load_prompt_template(kInterpretPrompt), {{"pinned_edits_block", ""}});
}

}  // namespace

TEST_CASE("the interpreter sees a flattened, gridded composite and the default prompt") {
  ScriptedInterpreter s(std::vector<std::string>{unit_reply({"a"})});
  const InferenceOutcome out = infer_motions(kDrawing, kNotes, s, {}, "w1");
  CHECK(out.job.workspace_id == "w1");
  CHECK(out.job.attempt == 1);
  CHECK(s.prompts() == std::vector<std::string>{default_prompt()});
  const Raster& img = out.job.composite_image;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) REQUIRE(img.pixel(x, y).a == 255);
  }
  CHECK(img == interpreter_image(kDrawing, kNotes));
  // Notation strokes sit above the drawing.
  CHECK(compose_canvas(kDrawing, kNotes).pixel(27, 28).r == 255);
}

TEST_CASE("invalid replies are retried with the repair hint") {
  ScriptedInterpreter s(std::vector<std::string>{"no json here", "{\"units\": 3}", unit_reply({"a"})});
  const InferenceOutcome out = infer_motions(kDrawing, kNotes, s);
  CHECK(out.job.attempt == 3);
  const auto prompts = s.prompts();
  REQUIRE(prompts.size() == 3);
  CHECK(prompts[1] == prompts[0] + "\n\n" + std::string(kRepairHint));
  CHECK(prompts[2] == prompts[1]);
}

TEST_CASE("retries give up with InterpretationInvalid carrying every violation") {
  ScriptedInterpreter s(std::vector<std::string>{"nope"});
  PipelineOptions opts;
  opts.max_retries = 1;
  try {
    infer_motions(kDrawing, kNotes, s, opts);
    FAIL("expected InterpretationInvalid");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InterpretationInvalid);
    CHECK(e.details()["raw"] == "nope");
    REQUIRE(e.details()["violations"].size() == 2);
    CHECK(e.details()["violations"][0]["code"] == "NoJsonFound");
  }
  CHECK(s.call_count() == 2);
}

TEST_CASE("backend errors are not retried") {
  ScriptedInterpreter empty;
  CHECK(test::error_code_of([&] { infer_motions(kDrawing, kNotes, empty); }) == Errc::BackendUnavailable);
  CHECK(empty.call_count() == 1);
}

TEST_CASE("tag colors are unique and first-seen colors are kept") {
  ScriptedInterpreter s(std::vector<std::string>{unit_reply({"a", "b", "c"})});
  const auto r = infer_motions(kDrawing, kNotes, s).result;
  std::set<std::string> colors;
  for (const auto& u : r.units) colors.insert(u.tag_color);
  CHECK(colors.size() == 3);
  CHECK(r.units[0].tag_color == tag_palette()[0]);

  InterpretationResult many;
  for (int i = 0; i < 20; ++i) {
    AnimationUnit u;
    u.id = "u" + std::to_string(i);
    if (i == 3) u.tag_color = std::string(tag_palette()[0]);
    many.units.push_back(u);
  }
  const auto colored = assign_tag_colors(many);
  std::set<std::string> all;
  for (const auto& u : colored.units) all.insert(u.tag_color);
  CHECK(all.size() == 20);
  CHECK(colored.units[3].tag_color == tag_palette()[0]);
  CHECK(colored.units[0].tag_color == tag_palette()[1]);
}

TEST_CASE("re-inference pins user edits") {
  ScriptedInterpreter first(std::vector<std::string>{unit_reply({"a", "b"})});
  const InterpretationResult original = infer_motions(kDrawing, kNotes, first).result;
  CHECK(test::error_code_of([&] { reinfer_with_edits(kDrawing, kNotes, original, first); }) == Errc::NothingPinned);

  UnitEdit edit;
  edit.target = "lands on the table";
  InterpretationResult edited = apply_unit_edit(original, "a", edit);
  edit = {};
  edit.summary = "b spins.";
  edited = apply_unit_edit(edited, "b", edit);

  // The model contradicts a's target, drops b and invents c.
  ScriptedInterpreter second(std::vector<std::string>{unit_reply({"a", "c"}, true)});
  const InferenceOutcome out = reinfer_with_edits(kDrawing, kNotes, edited, second);
  const std::string prompt = second.prompts().at(0);
  CHECK(prompt.find("User-confirmed edits (ground truth):") != std::string::npos);
  CHECK(prompt.find("- The user asserts: unit a target = \"lands on the table\"; do not contradict") != std::string::npos);
  CHECK(prompt.find("unit b summary = \"b spins.\"") != std::string::npos);
  CHECK(out.job.pinned_edits.size() == 2);

  const AnimationUnit* a = out.result.find_unit("a");
  REQUIRE(a != nullptr);
  CHECK(a->primary.target == "lands on the table");
  CHECK(a->pin_enforced);
  CHECK(a->tag_color == original.find_unit("a")->tag_color);
  const AnimationUnit* b = out.result.find_unit("b");
  REQUIRE(b != nullptr);
  CHECK(b->summary == "b spins.");
  CHECK(b->pin_enforced);
  CHECK(b->tag_color == original.find_unit("b")->tag_color);
  const AnimationUnit* c = out.result.find_unit("c");
  REQUIRE(c != nullptr);
  CHECK_FALSE(c->pin_enforced);
  CHECK(c->tag_color != a->tag_color);
  CHECK(c->tag_color != b->tag_color);
  CHECK(pinned_edits(out.result) == pinned_edits(edited));
}

TEST_CASE("re-inference keeps slider positions of matched units") {
  ScriptedInterpreter first(std::vector<std::string>{unit_reply({"a", "b"})});
  InterpretationResult r = infer_motions(kDrawing, kNotes, first).result;
  r = set_slider(r, "a", "amp", 1.75);
  UnitEdit edit;
  edit.path = "loop";
  r = apply_unit_edit(r, "b", edit);
  std::string reply = unit_reply({"a", "b"});
  // The new reply narrows a's slider range.
  const auto at = reply.find("\"label\":\"Amount\"");
  REQUIRE(at != std::string::npos);
  reply.insert(at, "\"max\":1.5,\"min\":0.5,");
  ScriptedInterpreter second(std::vector<std::string>{reply});
  const auto out = reinfer_with_edits(kDrawing, kNotes, r, second).result;
  CHECK(out.find_unit("a")->sliders[0].value == 1.5);
  CHECK(out.find_unit("b")->sliders[0].value == 1.0);
}

TEST_CASE("a reply that honours the pins is not flagged") {
  ScriptedInterpreter first(std::vector<std::string>{unit_reply({"a"})});
  const InterpretationResult original = infer_motions(kDrawing, kNotes, first).result;
  UnitEdit edit;
  edit.source = "a part";  // same as the model's value
  const InterpretationResult edited = apply_unit_edit(original, "a", edit);
  ScriptedInterpreter second(std::vector<std::string>{unit_reply({"a"})});
  const auto out = reinfer_with_edits(kDrawing, kNotes, edited, second);
  CHECK_FALSE(out.result.units[0].pin_enforced);
  CHECK(out.result.units[0].edited_fields == std::vector<EditableField>{EditableField::source});
}

TEST_CASE("pinned edit block text") {
  CHECK(pinned_edits_block({}).empty());
  CHECK(pinned_edits_block({{"u1", EditableField::path, ""}}) ==
        "\nUser-confirmed edits (ground truth):\n- The user asserts: unit u1 path = \"\"; do not contradict\n");
}

TEST_CASE("decomposition retries replies naming unknown units") {
  const InterpretationResult r = test::run_result();
  ScriptedInterpreter s(std::vector<std::string>{
      R"({"decomposition": [{"unit_id": "ghost", "part_name": "x", "verb": "y"}]})",
      R"([{"unit_id": "body_run", "part_name": "legs", "verb": "stride"}])"});
  const auto entries = decompose_units(Raster(30, 30), r, s);
  REQUIRE(entries.size() == 1);
  CHECK(entries[0] == DecompositionEntry{"body_run", "legs", "stride", ""});
  CHECK(s.call_count() == 2);
  CHECK(s.prompts()[0].find("\"unit_id\": \"hair_drag\"") != std::string::npos);
  CHECK(decompose_units(Raster(30, 30), InterpretationResult{}, s).empty());
}
