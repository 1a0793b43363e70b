#include "notana/prompt.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "notana/backend.hpp"
#include "notana/digest.hpp"
#include "notana/error.hpp"
#include "notana/template.hpp"

namespace notana {

using nlohmann::json;

namespace {

std::string slider_name(const DimensionSlider& s) { return s.label.empty() ? s.id : s.label; }

std::string trimmed(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

double progress_fraction(double time, const UnitSpan& span) {
  const double width = span.end - span.start;
  if (!(width > 0)) return time >= span.end ? 1.0 : 0.0;
  return std::clamp((time - span.start) / width, 0.0, 1.0);
}

std::vector<FramePrompt> synthesize_frame_prompts(const InterpretationResult& result, const Timeline& timeline,
                                                  const std::vector<ScheduleEntry>& schedule) {
  return synthesize_frame_prompts(result, timeline, schedule, load_prompt_template(kFramePrompt));
}

std::vector<FramePrompt> synthesize_frame_prompts(const InterpretationResult& result, const Timeline& timeline,
                                                  const std::vector<ScheduleEntry>& schedule,
                                                  std::string_view frame_template) {
  const std::string template_digest = sha256_hex(frame_template);

  // Slider clauses do not depend on time.
  std::string slider_clauses;
  for (const auto& u : result.units) {
    for (const auto& s : u.sliders) {
      if (s.value == s.default_value) continue;
      slider_clauses += fmt::format("Exaggerate {} of {} to {:.2f}× of the default extent.\n", slider_name(s),
                                    unit_label(u), s.value);
    }
  }
  if (!slider_clauses.empty()) slider_clauses += "\n";

  std::vector<FramePrompt> out;
  out.reserve(schedule.size());
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const ScheduleEntry& entry = schedule[i];

    std::string global_state;
    json unit_inputs = json::array();
    for (const auto& u : result.units) {
      const auto span = unit_span(timeline, u.id);
      const std::string summary = u.summary.empty() ? "no summary" : u.summary;
      if (span) {
        const double p = progress_fraction(entry.time, *span);
        global_state += fmt::format("- {}: {} (progress {:.2f} of this motion)\n", unit_label(u), summary, p);
      } else {
        global_state += fmt::format("- {}: {}\n", unit_label(u), summary);
      }
      unit_inputs.push_back(to_json(u));
    }
    if (global_state.empty()) global_state = "- no animated units\n";

    std::string local;
    json block_inputs = json::array();
    for (const auto& block_id : entry.active_blocks) {
      const Block* b = timeline.find_block(block_id);
      if (b == nullptr) throw Error(Errc::DanglingReference, "schedule names missing block '" + block_id + "'");
      const Track* t = timeline.track_of(*b);
      if (t == nullptr) throw Error(Errc::DanglingReference, "block '" + b->id + "' has no track");
      const AnimationUnit* u = result.find_unit(t->unit_id);
      if (u == nullptr) throw Error(Errc::DanglingReference, "track '" + t->id + "' names missing unit '" + t->unit_id + "'");
      if (b->description.empty()) {
        local += fmt::format("- {} [{}]\n", b->label, unit_label(*u));
      } else {
        local += fmt::format("- {} [{}]: {}\n", b->label, unit_label(*u), b->description);
      }
      block_inputs.push_back({{"id", b->id},
                              {"label", b->label},
                              {"start", b->start},
                              {"duration", b->duration},
                              {"description", b->description},
                              {"unit_id", t->unit_id}});
    }
    if (local.empty()) local = "- hold the current pose\n";

    // The template already separates slots with blank lines.
    global_state.pop_back();
    local.pop_back();

    FramePrompt fp;
    fp.marker_id = entry.marker_id;
    fp.index = static_cast<int>(i);
    fp.time = entry.time;
    fp.text = render_template(frame_template, {{"global_state", global_state},
                                               {"local_movements", local},
                                               {"slider_clauses", slider_clauses}});
    const json inputs = {{"template", template_digest}, {"time", entry.time}, {"marker_id", entry.marker_id},
                         {"units", unit_inputs},       {"active_blocks", block_inputs}};
    fp.inputs_digest = sha256_hex(inputs.dump());
    out.push_back(std::move(fp));
  }
  return out;
}

std::vector<FramePrompt> polish_frame_prompts(const std::vector<FramePrompt>& prompts, const Raster& reference,
                                              InterpreterBackend& interpreter) {
  const std::string tpl = load_prompt_template(kPolishPrompt);
  std::vector<FramePrompt> out = prompts;
  for (auto& p : out) {
    std::string reply = trimmed(interpreter.interpret(reference, render_template(tpl, {{"frame_prompt", p.text}})));
    if (!reply.empty()) p.text = std::move(reply);
  }
  return out;
}

}  // namespace notana
