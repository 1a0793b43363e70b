#include <doctest.h>

#include <fstream>

#include "notana/template.hpp"
#include "support.hpp"

using namespace notana;

TEST_CASE("known slots are substituted, everything else is verbatim") {
  const std::map<std::string, std::string, std::less<>> slots{{"name", "Ada"}, {"empty", ""}};
  CHECK(render_template("hi {name}!", slots) == "hi Ada!");
  CHECK(render_template("{name}{name}", slots) == "AdaAda");
  CHECK(render_template("a{empty}b", slots) == "ab");
  CHECK(render_template("{ source, path, target }", slots) == "{ source, path, target }");
  CHECK(render_template("{unknown} {Name} {} {", slots) == "{unknown} {Name} {} {");
  // Substituted text is not rescanned.
  CHECK(render_template("{name}", {{"name", "{name}"}}) == "{name}");
}

TEST_CASE("all built-in templates load and carry their slots") {
  const std::string interpret = load_prompt_template(kInterpretPrompt);
  CHECK(interpret.find("{pinned_edits_block}") != std::string::npos);
  const std::string frame = load_prompt_template(kFramePrompt);
  for (const char* slot : {"{global_state}", "{local_movements}", "{slider_clauses}"}) {
    CHECK(frame.find(slot) != std::string::npos);
  }
  CHECK(load_prompt_template(kDecomposePrompt).find("Decompose each animation unit") != std::string::npos);
  CHECK(load_prompt_template(kPolishPrompt).find("{frame_prompt}") != std::string::npos);
  CHECK(test::error_code_of([] { load_prompt_template("prompts/nope.txt"); }) == Errc::NotFound);
}

TEST_CASE("an override directory wins over the built-in copy") {
  test::TempDir dir;
  {
    std::ofstream out(dir / "frame_v1.txt");
    out << "custom {global_state}";
  }
  CHECK(load_prompt_template(kFramePrompt, dir.path()) == "custom {global_state}");
  CHECK(load_prompt_template(kInterpretPrompt, dir.path()) == load_prompt_template(kInterpretPrompt));
}
