#include "notana/pipeline.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "notana/backend.hpp"
#include "notana/digest.hpp"
#include "notana/error.hpp"

namespace notana {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 12> kPalette{"#e6194b", "#3cb44b", "#4363d8", "#f58231",
                                                    "#911eb4", "#42d4f4", "#f032e6", "#bfef45",
                                                    "#fabed4", "#469990", "#dcbeff", "#9a6324"};

bool retryable(Errc code) {
  return code == Errc::NoJsonFound || code == Errc::SchemaViolation || code == Errc::DuplicateUnitId ||
         code == Errc::UnknownUnitInDecomposition;
}

std::string extra_color(std::size_t n) {
  const Sha256 h = sha256("tag-color-" + std::to_string(n));
  return fmt::format("#{:02x}{:02x}{:02x}", h[0], h[1], h[2]);
}

// Calls the backend until `parse` succeeds or retries run out.
template <typename Parse>
auto ask_with_retries(InterpreterBackend& backend, const Raster& image, const std::string& prompt,
                      const PipelineOptions& options, int& attempts, std::string& last_raw, Parse parse) {
  json violations = json::array();
  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    const std::string text = attempt == 0 ? prompt : prompt + "\n\n" + std::string(kRepairHint);
    attempts = attempt + 1;
    last_raw = backend.interpret(image, text);
    try {
      return parse(last_raw);
    } catch (const Error& e) {
      if (!retryable(e.code())) throw;
      json v = e.to_json();
      v["attempt"] = attempt + 1;
      violations.push_back(std::move(v));
    }
  }
  throw Error(Errc::InterpretationInvalid,
              "interpreter reply still invalid after " + std::to_string(attempts) + " attempts",
              {{"raw", last_raw}, {"violations", violations}});
}

std::string render_interpret_prompt(const PipelineOptions& options, const std::vector<PinnedEdit>& pins) {
  const std::string tpl = load_prompt_template(options.prompt_template_id, options.template_dir);
  return render_template(tpl, {{"pinned_edits_block", pinned_edits_block(pins)}});
}

std::optional<std::string>& triplet_slot(AnimationUnit& u, EditableField f) {
  switch (f) {
    case EditableField::source: return u.primary.source;
    case EditableField::path: return u.primary.path;
    default: return u.primary.target;
  }
}

const std::optional<std::string>& triplet_slot(const AnimationUnit& u, EditableField f) {
  return triplet_slot(const_cast<AnimationUnit&>(u), f);
}

// Forces every pinned field of `unit` back to the value in `pinned`.
void enforce_pins(AnimationUnit& unit, const AnimationUnit& pinned) {
  for (auto f : pinned.edited_fields) {
    if (f == EditableField::summary) {
      if (unit.summary != pinned.summary) {
        unit.summary = pinned.summary;
        unit.pin_enforced = true;
      }
      continue;
    }
    auto& slot = triplet_slot(unit, f);
    const auto& want = triplet_slot(pinned, f);
    if (slot != want) {
      slot = want;
      unit.pin_enforced = true;
    }
  }
  if (unit.primary.present_count() == 0) {
    // The reply only kept fields the user cleared; fall back to the edited triplet.
    unit.primary = pinned.primary;
    unit.pin_enforced = true;
  }
  unit.edited_fields = pinned.edited_fields;
}

}  // namespace

Raster compose_canvas(const Raster& drawing, const Raster& notations) { return composite_over(drawing, notations); }

Raster interpreter_image(const Raster& drawing, const Raster& notations, const GridStyle& style) {
  if (drawing.empty()) throw Error(Errc::InvalidArgument, "drawing layer is empty");
  Raster flat(drawing.width(), drawing.height(), Rgba{255, 255, 255, 255});
  composite_over_in_place(flat, compose_canvas(drawing, notations));
  return overlay_grid(flat, GridSpec::for_image(flat), style);
}

std::string pinned_edits_block(const std::vector<PinnedEdit>& pins) {
  if (pins.empty()) return {};
  std::string out = "\nUser-confirmed edits (ground truth):\n";
  for (const auto& p : pins) {
    out += fmt::format("- The user asserts: unit {} {} = {}; do not contradict\n", p.unit_id, to_string(p.field),
                       json(p.value).dump());
  }
  return out;
}

const std::array<std::string_view, 12>& tag_palette() { return kPalette; }

InterpretationResult assign_tag_colors(InterpretationResult result) {
  std::set<std::string, std::less<>> taken;
  std::vector<bool> keep(result.units.size(), false);
  for (std::size_t i = 0; i < result.units.size(); ++i) {
    const auto& c = result.units[i].tag_color;
    if (!c.empty() && taken.insert(c).second) keep[i] = true;
  }
  std::size_t next = 0;
  for (std::size_t i = 0; i < result.units.size(); ++i) {
    if (keep[i]) continue;
    std::string color;
    do {
      color = next < kPalette.size() ? std::string(kPalette[next]) : extra_color(next);
      ++next;
    } while (taken.contains(color));
    taken.insert(color);
    result.units[i].tag_color = std::move(color);
  }
  return result;
}

InferenceOutcome infer_motions(const Raster& drawing, const Raster& notations, InterpreterBackend& backend,
                               const PipelineOptions& options, std::string workspace_id) {
  InferenceOutcome out;
  out.job.workspace_id = std::move(workspace_id);
  out.job.prompt_template_id = options.prompt_template_id;
  out.job.composite_image = interpreter_image(drawing, notations, options.grid);
  const std::string prompt = render_interpret_prompt(options, {});
  out.result = ask_with_retries(backend, out.job.composite_image, prompt, options, out.job.attempt, out.raw_reply,
                                [&](const std::string& raw) { return parse_interpretation(raw, options.parse); });
  out.result = assign_tag_colors(std::move(out.result));
  validate(out.result);
  return out;
}

InferenceOutcome reinfer_with_edits(const Raster& drawing, const Raster& notations, const InterpretationResult& edited,
                                    InterpreterBackend& backend, const PipelineOptions& options,
                                    std::string workspace_id) {
  const std::vector<PinnedEdit> pins = pinned_edits(edited);
  if (pins.empty()) throw Error(Errc::NothingPinned, "no unit carries user edits to pin");

  InferenceOutcome out;
  out.job.workspace_id = std::move(workspace_id);
  out.job.prompt_template_id = options.prompt_template_id;
  out.job.pinned_edits = pins;
  out.job.composite_image = interpreter_image(drawing, notations, options.grid);
  const std::string prompt = render_interpret_prompt(options, pins);
  InterpretationResult fresh =
      ask_with_retries(backend, out.job.composite_image, prompt, options, out.job.attempt, out.raw_reply,
                       [&](const std::string& raw) { return parse_interpretation(raw, options.parse); });

  for (auto& u : fresh.units) {
    u.pin_enforced = false;
    u.edited_fields.clear();
    if (const AnimationUnit* before = edited.find_unit(u.id)) {
      u.tag_color = before->tag_color;
      if (!before->edited_fields.empty()) enforce_pins(u, *before);
      for (auto& s : u.sliders) {
        if (const DimensionSlider* old = before->find_slider(s.id)) s.value = std::clamp(old->value, s.min, s.max);
      }
    } else {
      u.tag_color.clear();
    }
  }
  for (const auto& before : edited.units) {
    if (before.edited_fields.empty() || fresh.find_unit(before.id) != nullptr) continue;
    AnimationUnit restored = before;
    restored.pin_enforced = true;
    fresh.units.push_back(std::move(restored));
  }
  out.result = assign_tag_colors(std::move(fresh));
  validate(out.result);
  return out;
}

std::vector<DecompositionEntry> decompose_units(const Raster& image, const InterpretationResult& result,
                                                InterpreterBackend& backend, const PipelineOptions& options) {
  if (result.units.empty()) return {};
  json units = json::array();
  for (const auto& u : result.units) {
    units.push_back({{"unit_id", u.id},
                     {"summary", u.summary},
                     {"source", u.primary.source ? json(*u.primary.source) : json(nullptr)},
                     {"path", u.primary.path ? json(*u.primary.path) : json(nullptr)},
                     {"target", u.primary.target ? json(*u.primary.target) : json(nullptr)},
                     {"temporal_order", u.temporal_order ? json(*u.temporal_order) : json(nullptr)}});
  }
  const std::string tpl = load_prompt_template(kDecomposePrompt, options.template_dir);
  const std::string prompt = render_template(tpl, {{"units_json", units.dump(2)}});
  int attempts = 0;
  std::string raw;
  return ask_with_retries(backend, image, prompt, options, attempts, raw, [&](const std::string& reply) {
    auto entries = parse_decomposition(reply);
    for (const auto& e : entries) {
      if (result.find_unit(e.unit_id) == nullptr) {
        throw Error(Errc::UnknownUnitInDecomposition, "decomposition names unknown unit '" + e.unit_id + "'",
                    {{"unit_id", e.unit_id}});
      }
    }
    return entries;
  });
}

}  // namespace notana
