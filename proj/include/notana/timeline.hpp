#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "notana/intent.hpp"

// Per-part timeline built from interpreted units. Time is measured in beats;
// `beat_duration_hint` (seconds per beat) is for display only.
namespace notana {

// One primitive motion of a unit, as returned by the decomposition call.
struct DecompositionEntry {
  std::string unit_id;
  std::string part_name;
  std::string verb;
  std::string description;
  friend bool operator==(const DecompositionEntry&, const DecompositionEntry&) = default;
};

// Accepts {"decomposition": [...]} (possibly wrapped in prose) or a bare array.
// Throws NoJsonFound / SchemaViolation.
std::vector<DecompositionEntry> parse_decomposition(std::string_view raw);
nlohmann::json to_json(const std::vector<DecompositionEntry>& entries);

struct Track {
  std::string id;
  std::string part_name;
  std::string unit_id;
  std::string color;  // the owning unit's tag color
  friend bool operator==(const Track&, const Track&) = default;
};

struct Block {
  std::string id;
  std::string track_id;
  std::string label;  // "<part> <verb>", e.g. "head tilt up"
  double start = 0;
  double duration = 1;
  std::string description;
  friend bool operator==(const Block&, const Block&) = default;

  double end() const noexcept { return start + duration; }
};

enum class MarkerStatus { placeholder, generated };

struct KeyframeMarker {
  std::string id;
  double time = 0;
  MarkerStatus status = MarkerStatus::placeholder;
  std::optional<std::string> frame_ref;
  // A generated marker whose block was deleted or moved away keeps its frame.
  bool orphaned = false;
  friend bool operator==(const KeyframeMarker&, const KeyframeMarker&) = default;
};

struct Timeline {
  std::vector<Track> tracks;
  std::vector<Block> blocks;
  std::vector<KeyframeMarker> markers;  // ascending by time
  double beat_duration_hint = 0.5;
  friend bool operator==(const Timeline&, const Timeline&) = default;

  const Track* find_track(std::string_view id) const;
  const Block* find_block(std::string_view id) const;
  const KeyframeMarker* find_marker(std::string_view id) const;
  // Unit owning a block, via its track; nullptr when dangling.
  const Track* track_of(const Block& block) const;
};

inline constexpr double kDefaultBlockBeats = 1.0;
inline constexpr double kUnitOffsetBeats = 1.0;

// Lays units out in sequence (global_timeline order when given, else by
// temporal_order with unordered units last), one slot per distinct order;
// blocks of a unit share its slot's start. Throws UnknownUnitInDecomposition.
Timeline build_timeline(const InterpretationResult& result, const std::vector<DecompositionEntry>& decomposition);

// Edits return a new timeline. A block's trailing placeholder marker follows
// its end when no other block ends there; a shared marker stays and a new
// placeholder is added at the new end. Throws UnknownBlock, UnknownTrack,
// NonPositiveDuration, NegativeStart.
Timeline move_block(const Timeline& timeline, std::string_view block_id, double new_start);
Timeline resize_block(const Timeline& timeline, std::string_view block_id, double new_duration);
Timeline delete_block(const Timeline& timeline, std::string_view block_id);
Timeline add_block(const Timeline& timeline, std::string_view track_id, std::string label, double start,
                   double duration, std::string description = {});

// Marks a marker as generated from `frame_id`. Throws InvalidArgument for an unknown marker.
Timeline mark_generated(const Timeline& timeline, std::string_view marker_id, std::string frame_id);

// Turns every generated, non-orphaned marker back into a placeholder so a new
// generation run covers it again.
Timeline reopen_markers(const Timeline& timeline);

struct ScheduleEntry {
  double time = 0;
  std::vector<std::string> active_blocks;  // closed-interval containment
  std::string marker_id;
  friend bool operator==(const ScheduleEntry&, const ScheduleEntry&) = default;
};

// One entry per placeholder marker, ascending by time.
std::vector<ScheduleEntry> keyframe_schedule(const Timeline& timeline);

// Empty when every invariant holds; otherwise human-readable violations.
std::vector<std::string> timeline_violations(const Timeline& timeline);

// [first block start, last block end] of a unit; nullopt without blocks.
struct UnitSpan {
  double start;
  double end;
};
std::optional<UnitSpan> unit_span(const Timeline& timeline, std::string_view unit_id);

nlohmann::json to_json(const Timeline& timeline);
Timeline timeline_from_json(const nlohmann::json& j);

}  // namespace notana
