#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "notana/intent.hpp"
#include "notana/timeline.hpp"

namespace notana {

class InterpreterBackend;
class Raster;

struct FramePrompt {
  std::string marker_id;
  int index = 0;
  double time = 0;
  std::string text;
  std::string inputs_digest;  // hex SHA-256 of the inputs that shaped `text`
  friend bool operator==(const FramePrompt&, const FramePrompt&) = default;
};

// Fraction of a unit's span elapsed at `time`, clamped to [0, 1].
double progress_fraction(double time, const UnitSpan& span);

// One prompt per schedule entry, rendered from the frame template (slots
// {global_state}, {local_movements}, {slider_clauses}). Sliders at their
// default produce no clause. Throws DanglingReference when a scheduled block,
// its track or its unit is missing.
std::vector<FramePrompt> synthesize_frame_prompts(const InterpretationResult& result, const Timeline& timeline,
                                                  const std::vector<ScheduleEntry>& schedule);
std::vector<FramePrompt> synthesize_frame_prompts(const InterpretationResult& result, const Timeline& timeline,
                                                  const std::vector<ScheduleEntry>& schedule,
                                                  std::string_view frame_template);

// Optional rewrite of each prompt by the interpreter model (polish template).
// Digests are kept; only the text changes. Empty replies keep the original.
std::vector<FramePrompt> polish_frame_prompts(const std::vector<FramePrompt>& prompts, const Raster& reference,
                                              InterpreterBackend& interpreter);

}  // namespace notana
