#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "notana/generation.hpp"
#include "notana/intent.hpp"
#include "notana/raster.hpp"
#include "notana/timeline.hpp"

namespace notana {

enum class BrushMode { drawing, notation };

struct BrushState {
  BrushMode mode = BrushMode::drawing;
  double size = 4.0;
  std::string color = "#000000";
  friend bool operator==(const BrushState&, const BrushState&) = default;
};

// Full authoring state of one canvas.
struct Workspace {
  std::string id;
  std::string created_at;  // RFC 3339 UTC
  std::string modified_at;
  Raster drawing_layer;
  Raster notation_layer;
  std::optional<InterpretationResult> interpretation;
  std::optional<Timeline> timeline;
  std::vector<FrameRecord> frames;
  BrushState brush;
  // Condition frame 0 on drawing + notations instead of the clean drawing.
  bool generate_with_notations = false;
  friend bool operator==(const Workspace&, const Workspace&) = default;

  // A blank workspace with transparent layers of the given size.
  static Workspace blank(std::string id, int width, int height, std::string now);
};

inline constexpr int kDefaultCanvasPx = 900;

// Throws DimensionMismatch (layers differ), InvalidArgument (frames not
// contiguous, done frame without image, bad brush) or the interpretation's
// own validation errors.
void validate(const Workspace& ws);

// Manifest: everything except raster pixels, which live in drawing.png,
// notation.png and frames/<index>.png. Canonical text is sorted-key JSON with
// two-space indent and a trailing newline.
nlohmann::json manifest_json(const Workspace& ws);
std::string manifest_text(const Workspace& ws);

// Self-contained canonical form (rasters as base64 PNG). Identical workspaces
// always serialize to identical bytes.
std::string serialize_workspace(const Workspace& ws);
// Throws SerializationError.
Workspace deserialize_workspace(std::string_view bytes);

// The base raster frame 0 is conditioned on.
Raster generation_base(const Workspace& ws);

}  // namespace notana
