#include "notana/demo.hpp"

#include "fsutil.hpp"
#include "notana/assets.hpp"
#include "notana/backend.hpp"
#include "notana/digest.hpp"
#include "notana/error.hpp"
#include "notana/pipeline.hpp"
#include "notana/store.hpp"

namespace notana {

using nlohmann::json;

namespace {

constexpr std::string_view kDemoClock = "2025-01-01T00:00:00Z";
constexpr std::string_view kDecomposeMarker = "Decompose each animation unit";

std::string asset_text(std::string_view example, std::string_view file) {
  const std::string name = "demos/" + std::string(example) + "/" + std::string(file);
  const auto text = assets::find(name);
  if (!text) throw Error(Errc::NotFound, "missing demo asset " + name);
  return std::string(*text);
}

Rgba parse_color(const json& j) {
  const std::string s = j.get<std::string>();
  if (s.size() != 7 || s[0] != '#') throw Error(Errc::InvalidArgument, "bad color '" + s + "'");
  const auto v = std::stoul(s.substr(1), nullptr, 16);
  return {static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>((v >> 8) & 0xff),
          static_cast<std::uint8_t>(v & 0xff), 255};
}

const Block& block_by_label(const Timeline& tl, const std::string& label) {
  for (const auto& b : tl.blocks) {
    if (b.label == label) return b;
  }
  throw Error(Errc::UnknownBlock, "demo script names unknown block '" + label + "'");
}

Timeline apply_edits(Timeline tl, const json& edits) {
  for (const auto& e : edits) {
    const std::string op = e.at("op").get<std::string>();
    const std::string id = block_by_label(tl, e.at("block").get<std::string>()).id;
    if (op == "move") {
      tl = move_block(tl, id, e.at("start").get<double>());
    } else if (op == "resize") {
      tl = resize_block(tl, id, e.at("duration").get<double>());
    } else if (op == "delete") {
      tl = delete_block(tl, id);
    } else {
      throw Error(Errc::InvalidArgument, "unknown demo edit '" + op + "'");
    }
  }
  return tl;
}

void require_example(std::string_view example) {
  const auto& names = demo_examples();
  if (std::find(names.begin(), names.end(), example) == names.end()) {
    throw Error(Errc::NotFound, "no demo named '" + std::string(example) + "'", {{"available", names}});
  }
}

}  // namespace

const std::vector<std::string>& demo_examples() {
  static const std::vector<std::string> names{"run", "cubes", "splash"};
  return names;
}

namespace {

void draw_shape(Raster& r, const json& s) {
  const std::string kind = s.at("kind").get<std::string>();
  const Rgba color = parse_color(s.at("color"));
  const int w = s.value("width", 1);
  if (kind == "line") {
    draw_line(r, s.at("from").at(0), s.at("from").at(1), s.at("to").at(0), s.at("to").at(1), color, w);
  } else if (kind == "circle") {
    draw_circle(r, s.at("center").at(0), s.at("center").at(1), s.at("radius"), color, w);
  } else if (kind == "rect") {
    const int x0 = s.at("from").at(0), y0 = s.at("from").at(1), x1 = s.at("to").at(0), y1 = s.at("to").at(1);
    if (s.value("fill", false)) {
      fill_rect(r, x0, y0, x1, y1, color);
    } else {
      draw_line(r, x0, y0, x1, y0, color, w);
      draw_line(r, x1, y0, x1, y1, color, w);
      draw_line(r, x1, y1, x0, y1, color, w);
      draw_line(r, x0, y1, x0, y0, color, w);
    }
  } else {
    throw Error(Errc::InvalidArgument, "unknown shape kind '" + kind + "'");
  }
}

}  // namespace

Raster render_shapes(const json& shapes, int width, int height) {
  Raster r(width, height);
  for (const auto& s : shapes) {
    try {
      draw_shape(r, s);
    } catch (const json::exception& e) {
      throw Error(Errc::InvalidArgument, std::string("malformed shape: ") + e.what(), {{"shape", s}});
    }
  }
  return r;
}

std::vector<std::string> stamp_chain_violations(const Raster& base, const std::vector<FrameRecord>& records) {
  std::vector<std::string> out;
  if (!read_stamps(base).empty()) out.push_back("base image already carries stamps");
  std::vector<Sha256> expected;
  for (const auto& r : records) {
    expected.push_back(sha256(r.prompt_text));
    if (r.status != FrameStatus::done || !r.image) {
      out.push_back("frame " + r.frame_id + " is not done");
      break;
    }
    if (read_stamps(*r.image) != expected) {
      out.push_back("frame " + r.frame_id + " does not carry the digests of prompts 0.." + std::to_string(r.index));
    }
  }
  return out;
}

std::unique_ptr<ScriptedInterpreter> demo_interpreter(std::string_view example) {
  require_example(example);
  const json scene = json::parse(asset_text(example, "scene.json"));
  const std::string interpretation_reply = scene.value("reply_prefix", std::string()) +
                                           asset_text(example, "interpretation.json") +
                                           scene.value("reply_suffix", std::string());
  return std::make_unique<ScriptedInterpreter>(std::vector<ScriptedInterpreter::Rule>{
      {std::string(kDecomposeMarker), {asset_text(example, "decomposition.json")}},
      {"", {interpretation_reply}},
  });
}

DemoReport run_demo(std::string_view example) {
  require_example(example);
  const json scene = json::parse(asset_text(example, "scene.json"));
  const int width = scene.at("canvas")[0];
  const int height = scene.at("canvas")[1];

  DemoReport report;
  report.example = std::string(example);
  Workspace& ws = report.workspace;
  ws = Workspace::blank("demo-" + report.example, width, height, std::string(kDemoClock));
  ws.drawing_layer = render_shapes(scene.at("drawing"), width, height);
  ws.notation_layer = render_shapes(scene.at("notations"), width, height);

  auto scripted = demo_interpreter(example);
  ScriptedInterpreter& interpreter = *scripted;

  InterpretationResult result = infer_motions(ws.drawing_layer, ws.notation_layer, interpreter, {}, ws.id).result;
  for (const auto& s : scene.value("sliders", json::array())) {
    result = set_slider(result, s.at("unit").get<std::string>(), s.at("slider").get<std::string>(),
                        s.at("value").get<double>());
  }
  const Raster grid_image = interpreter_image(ws.drawing_layer, ws.notation_layer);
  const auto decomposition = decompose_units(grid_image, result, interpreter);
  Timeline timeline = build_timeline(result, decomposition);
  const auto expected_blocks = scene.at("expected_blocks").get<std::size_t>();
  if (timeline.blocks.size() != expected_blocks || timeline.tracks.size() != expected_blocks) {
    throw Error(Errc::InvalidArgument, "demo timeline does not match the fixture",
                {{"blocks", timeline.blocks.size()}, {"tracks", timeline.tracks.size()}, {"expected", expected_blocks}});
  }
  timeline = apply_edits(std::move(timeline), scene.value("edits", json::array()));

  const auto schedule = keyframe_schedule(timeline);
  report.prompts = synthesize_frame_prompts(result, timeline, schedule);
  const auto expected_frames = scene.at("expected_frames").get<std::size_t>();
  if (report.prompts.size() != expected_frames) {
    throw Error(Errc::InvalidArgument, "demo schedule does not match the fixture",
                {{"frames", report.prompts.size()}, {"expected", expected_frames}});
  }

  DigestStamper stamper;
  const Raster base = generation_base(ws);
  GenerationOutcome outcome = generate_frames(base, report.prompts, stamper);
  if (outcome.error) throw *outcome.error;
  const auto chain = stamp_chain_violations(base, outcome.records);
  if (!chain.empty()) throw Error(Errc::InvalidArgument, "stamp chain broken", {{"violations", chain}});

  for (const auto& r : outcome.records) timeline = mark_generated(timeline, r.marker_id, r.frame_id);
  ws.interpretation = std::move(result);
  ws.timeline = std::move(timeline);
  ws.frames = std::move(outcome.records);
  report.interpreter_calls = interpreter.call_count();
  validate(ws);
  return report;
}

void write_demo(const DemoReport& report, const std::filesystem::path& out_dir) {
  write_workspace_files(report.workspace, out_dir);
  detail::write_file_atomic(out_dir / "result.json", serialize(*report.workspace.interpretation));
  json prompts = json::array();
  for (const auto& p : report.prompts) {
    prompts.push_back({{"marker_id", p.marker_id},
                       {"index", p.index},
                       {"time", p.time},
                       {"text", p.text},
                       {"inputs_digest", p.inputs_digest}});
  }
  detail::write_file_atomic(out_dir / "prompts.json", prompts.dump(2) + "\n");
}

}  // namespace notana
