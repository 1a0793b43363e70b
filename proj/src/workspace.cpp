#include "notana/workspace.hpp"

#include "notana/digest.hpp"
#include "notana/error.hpp"
#include "notana/pipeline.hpp"

namespace notana {

using nlohmann::json;

namespace {

constexpr int kManifestFormat = 1;

json brush_json(const BrushState& b) {
  return {{"mode", b.mode == BrushMode::drawing ? "drawing" : "notation"}, {"size", b.size}, {"color", b.color}};
}

BrushState brush_from_json(const json& j) {
  BrushState b;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode != "drawing" && mode != "notation") throw Error(Errc::SerializationError, "unknown brush mode '" + mode + "'");
  b.mode = mode == "drawing" ? BrushMode::drawing : BrushMode::notation;
  b.size = j.at("size").get<double>();
  b.color = j.at("color").get<std::string>();
  return b;
}

json raster_b64(const Raster& r) {
  if (r.empty()) return nullptr;
  return base64_encode(encode_png(r));
}

Raster raster_from_b64(const json& j) {
  if (j.is_null()) return {};
  const auto bytes = base64_decode(j.get<std::string>());
  return decode_png(bytes);
}

// Fields shared by the manifest and the snapshot form.
json common_json(const Workspace& ws) {
  json frames = json::array();
  for (const auto& f : ws.frames) {
    json fj = to_json(f);
    if (f.image) fj["file"] = "frames/" + std::to_string(f.index) + ".png";
    frames.push_back(std::move(fj));
  }
  return {{"format", kManifestFormat},
          {"id", ws.id},
          {"created_at", ws.created_at},
          {"modified_at", ws.modified_at},
          {"width", ws.drawing_layer.width()},
          {"height", ws.drawing_layer.height()},
          {"interpretation", ws.interpretation ? to_json(*ws.interpretation) : json(nullptr)},
          {"timeline", ws.timeline ? to_json(*ws.timeline) : json(nullptr)},
          {"frames", frames},
          {"brush", brush_json(ws.brush)},
          {"generate_with_notations", ws.generate_with_notations}};
}

}  // namespace

Workspace Workspace::blank(std::string id, int width, int height, std::string now) {
  if (width <= 0 || height <= 0) throw Error(Errc::InvalidArgument, "canvas size must be positive");
  Workspace ws;
  ws.id = std::move(id);
  ws.created_at = now;
  ws.modified_at = std::move(now);
  ws.drawing_layer = Raster(width, height);
  ws.notation_layer = Raster(width, height);
  return ws;
}

void validate(const Workspace& ws) {
  if (ws.id.empty()) throw Error(Errc::InvalidArgument, "workspace id is empty");
  if (!ws.drawing_layer.same_size(ws.notation_layer)) {
    throw Error(Errc::DimensionMismatch, "drawing and notation layers differ in size",
                {{"drawing", {ws.drawing_layer.width(), ws.drawing_layer.height()}},
                 {"notation", {ws.notation_layer.width(), ws.notation_layer.height()}}});
  }
  if (!(ws.brush.size > 0)) throw Error(Errc::InvalidArgument, "brush size must be positive");
  if (ws.interpretation) validate(*ws.interpretation);
  if (ws.timeline) {
    const auto problems = timeline_violations(*ws.timeline);
    if (!problems.empty()) throw Error(Errc::InvalidArgument, "timeline invalid", {{"violations", problems}});
  }
  const auto chain = frame_chain_violations(ws.frames);
  if (!chain.empty()) throw Error(Errc::InvalidArgument, "frame records invalid", {{"violations", chain}});
}

json manifest_json(const Workspace& ws) {
  json j = common_json(ws);
  j["drawing"] = "drawing.png";
  j["notation"] = "notation.png";
  return j;
}

std::string manifest_text(const Workspace& ws) { return manifest_json(ws).dump(2) + "\n"; }

std::string serialize_workspace(const Workspace& ws) {
  json j = common_json(ws);
  j["drawing_png"] = raster_b64(ws.drawing_layer);
  j["notation_png"] = raster_b64(ws.notation_layer);
  for (std::size_t i = 0; i < ws.frames.size(); ++i) {
    if (ws.frames[i].image) j["frames"][i]["png"] = raster_b64(*ws.frames[i].image);
  }
  return j.dump();
}

Workspace deserialize_workspace(std::string_view bytes) {
  const json j = json::parse(bytes, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::SerializationError, "workspace snapshot is not JSON");
  try {
    if (j.at("format").get<int>() != kManifestFormat) {
      throw Error(Errc::SerializationError, "unsupported workspace format", {{"format", j.at("format")}});
    }
    Workspace ws;
    ws.id = j.at("id").get<std::string>();
    ws.created_at = j.at("created_at").get<std::string>();
    ws.modified_at = j.at("modified_at").get<std::string>();
    ws.drawing_layer = raster_from_b64(j.at("drawing_png"));
    ws.notation_layer = raster_from_b64(j.at("notation_png"));
    if (!j.at("interpretation").is_null()) ws.interpretation = interpretation_from_json(j["interpretation"]);
    if (!j.at("timeline").is_null()) ws.timeline = timeline_from_json(j["timeline"]);
    for (const auto& fj : j.at("frames")) {
      FrameRecord r = frame_record_from_json(fj);
      if (fj.contains("png")) r.image = raster_from_b64(fj["png"]);
      ws.frames.push_back(std::move(r));
    }
    ws.brush = brush_from_json(j.at("brush"));
    ws.generate_with_notations = j.at("generate_with_notations").get<bool>();
    return ws;
  } catch (const json::exception& e) {
    throw Error(Errc::SerializationError, std::string("malformed workspace snapshot: ") + e.what());
  }
}

Raster generation_base(const Workspace& ws) {
  if (!ws.generate_with_notations) return ws.drawing_layer;
  return compose_canvas(ws.drawing_layer, ws.notation_layer);
}

}  // namespace notana
