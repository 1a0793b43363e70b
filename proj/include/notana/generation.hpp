#pragma once

#include <functional>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "notana/error.hpp"
#include "notana/prompt.hpp"
#include "notana/raster.hpp"

// Progressive keyframe generation: frame i is produced from frame i-1's image
// and prompt i; frame 0 from the base drawing.
namespace notana {

class ImageBackend;

enum class FrameStatus { pending, generating, done, failed };
std::string_view to_string(FrameStatus v);
std::optional<FrameStatus> frame_status_from_string(std::string_view name);

inline constexpr std::string_view kBaseFrameId = "base";

struct FrameRecord {
  std::string frame_id;  // "f<index>"
  std::string marker_id;
  int index = 0;
  FrameStatus status = FrameStatus::pending;
  std::optional<Raster> image;
  std::string prompt_digest;  // hex SHA-256 of prompt_text
  std::string prompt_text;
  std::string parent_frame_id;  // kBaseFrameId for index 0, else "f<index-1>"
  std::optional<nlohmann::json> error;  // ApiError of the last failure
  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

std::string frame_id_for(int index);

// Pending records for a prompt list, without running anything.
std::vector<FrameRecord> plan_frames(const std::vector<FramePrompt>& prompts);

struct GenerationHooks {
  // Called after every status change with the full record list.
  std::function<void(const std::vector<FrameRecord>&)> on_update;
  // Checked before each frame; a stop request leaves the rest pending.
  std::stop_token stop;
};

struct GenerationOutcome {
  std::vector<FrameRecord> records;
  std::optional<Error> error;  // first failure (details carry "index") or Cancelled
};

// Strictly sequential. On failure at i: frame i failed, later frames pending,
// earlier frames kept. Throws InvalidArgument for an empty or unordered list.
GenerationOutcome generate_frames(const Raster& base, const std::vector<FramePrompt>& prompts, ImageBackend& backend,
                                  const GenerationHooks& hooks = {});

// Runs all records that are not done, starting at the first such frame.
GenerationOutcome resume_frames(const Raster& base, std::vector<FrameRecord> records, ImageBackend& backend,
                                const GenerationHooks& hooks = {});

// Re-runs frame `index` from its parent and resets every later frame to
// pending (prompts kept). Frames before `index` are untouched. Throws
// InvalidArgument (bad index), ParentNotReady, or the backend's error, in
// which case nothing is modified.
std::vector<FrameRecord> regenerate_frame(const Raster& base, const std::vector<FrameRecord>& records, int index,
                                          ImageBackend& backend);

// Composites the selected frames over `base`, oldest first. Default ramp is
// (k+1)/n for the k-th oldest of n. Throws FrameNotReady, InvalidArgument
// (ramp size, unknown index), DimensionMismatch.
Raster onion_skin(const Raster& base, const std::vector<FrameRecord>& records, std::vector<int> selected,
                  const std::optional<std::vector<double>>& ramp = std::nullopt);

// Empty when indices are contiguous from 0, done frames have images, and
// parent links form the path base -> f0 -> f1 -> ...
std::vector<std::string> frame_chain_violations(const std::vector<FrameRecord>& records);

// Metadata only; images are stored as separate PNGs.
nlohmann::json to_json(const FrameRecord& record);
FrameRecord frame_record_from_json(const nlohmann::json& j);

}  // namespace notana
