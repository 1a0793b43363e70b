#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "notana/grid.hpp"
#include "notana/intent.hpp"
#include "notana/raster.hpp"
#include "notana/template.hpp"
#include "notana/timeline.hpp"

// Interpretation: composite the layers, overlay the grid, ask the interpreter
// backend, parse and validate, and re-infer with user edits pinned.
namespace notana {

class InterpreterBackend;

inline constexpr std::string_view kRepairHint =
    "Your previous reply was not a single valid JSON object; return only the JSON";

struct InferenceJob {
  std::string workspace_id;
  Raster composite_image;  // what the interpreter saw, grid included
  std::string prompt_template_id;
  int attempt = 0;  // 1-based count of backend calls made
  std::vector<PinnedEdit> pinned_edits;
};

struct PipelineOptions {
  int max_retries = 2;
  std::string prompt_template_id = std::string(kInterpretPrompt);
  std::optional<std::filesystem::path> template_dir;
  ParseOptions parse;
  GridStyle grid;
};

struct InferenceOutcome {
  InterpretationResult result;
  InferenceJob job;
  std::string raw_reply;
};

// Notation layer over drawing layer. Throws DimensionMismatch.
Raster compose_canvas(const Raster& drawing, const Raster& notations);

// The image sent to the interpreter: layers flattened onto white, then the
// 30x30 grid. Throws InvalidArgument for an empty drawing.
Raster interpreter_image(const Raster& drawing, const Raster& notations, const GridStyle& style = {});

// Text substituted for {pinned_edits_block}; empty when there are no pins.
std::string pinned_edits_block(const std::vector<PinnedEdit>& pins);

// 12 categorical colors, then deterministic hash-derived ones.
const std::array<std::string_view, 12>& tag_palette();
// Keeps each unit's first-seen color and gives the others the next unused one.
InterpretationResult assign_tag_colors(InterpretationResult result);

// Retries NoJsonFound / SchemaViolation / DuplicateUnitId up to
// options.max_retries times with the repair hint appended, then throws
// InterpretationInvalid (details: raw, violations). Backend errors pass through.
InferenceOutcome infer_motions(const Raster& drawing, const Raster& notations, InterpreterBackend& backend,
                               const PipelineOptions& options = {}, std::string workspace_id = {});

// Re-asks with every user-asserted field pinned. Pinned values the reply
// contradicts are restored and the unit flagged pin_enforced; units the
// reply dropped are put back; matched units keep their original colors and
// slider positions.
// Throws NothingPinned when `edited` carries no edits.
InferenceOutcome reinfer_with_edits(const Raster& drawing, const Raster& notations, const InterpretationResult& edited,
                                    InterpreterBackend& backend, const PipelineOptions& options = {},
                                    std::string workspace_id = {});

// Second interpreter call splitting units into per-part primitive motions.
// Retries like infer_motions; entries naming unknown units count as invalid.
std::vector<DecompositionEntry> decompose_units(const Raster& image, const InterpretationResult& result,
                                                InterpreterBackend& backend, const PipelineOptions& options = {});

}  // namespace notana
