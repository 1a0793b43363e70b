#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "notana/coords.hpp"

// Structured animation intent: what an interpreter backend says the user's
// notations mean, one AnimationUnit per intended motion.
namespace notana {

using Json = nlohmann::json;

// Source (what moves), path (how it moves), target (end state). Any field may
// be omitted, but not all three.
struct PrimaryTriplet {
  std::optional<std::string> source;
  std::optional<std::string> path;
  std::optional<std::string> target;
  Json extras = Json::object();
  friend bool operator==(const PrimaryTriplet&, const PrimaryTriplet&) = default;

  int present_count() const noexcept;
};

enum class ModifierProperty { color, thickness, text, number, letter, style, other };
enum class ModifierScope { source, path, target, unit };

struct SecondaryModifier {
  ModifierProperty property = ModifierProperty::other;
  std::string value;
  std::string intended_meaning;
  ModifierScope scope = ModifierScope::unit;
  Json extras = Json::object();
  friend bool operator==(const SecondaryModifier&, const SecondaryModifier&) = default;
};

enum class SliderKind { amplitude, directional_bias, timing };

struct DimensionSlider {
  std::string id;
  std::string label;
  SliderKind kind = SliderKind::amplitude;
  double min = 0.5;
  double max = 1.5;
  double default_value = 1.0;
  double value = 1.0;
  // Semantic endpoint labels, e.g. "shoulder level".
  std::optional<std::string> min_anchor;
  std::optional<std::string> max_anchor;
  Json extras = Json::object();
  friend bool operator==(const DimensionSlider&, const DimensionSlider&) = default;
};

// Fields a user can assert; asserted fields are pinned on re-inference.
enum class EditableField { source, path, target, summary };

struct AnimationUnit {
  std::string id;
  std::string tag_color;  // empty until assigned
  RoiBBox roi;
  PrimaryTriplet primary;
  std::vector<SecondaryModifier> modifiers;
  std::optional<std::int64_t> temporal_order;
  double confidence = 0;
  std::string summary;
  std::vector<DimensionSlider> sliders;
  std::vector<EditableField> edited_fields;  // sorted, unique
  bool pin_enforced = false;
  Json extras = Json::object();
  friend bool operator==(const AnimationUnit&, const AnimationUnit&) = default;

  const DimensionSlider* find_slider(std::string_view slider_id) const;
  bool is_edited(EditableField field) const;
  // Current value of a field; nullopt for an omitted triplet field.
  std::optional<std::string> field_value(EditableField field) const;
};

struct UnassignedMark {
  std::string note;
  RoiBBox bbox;
  Json extras = Json::object();
  friend bool operator==(const UnassignedMark&, const UnassignedMark&) = default;
};

struct LegendEntry {
  std::string cue;
  std::string meaning;
  Json extras = Json::object();
  friend bool operator==(const LegendEntry&, const LegendEntry&) = default;
};

struct InterpretationResult {
  std::vector<AnimationUnit> units;
  std::vector<UnassignedMark> unassigned_marks;
  std::vector<std::string> global_timeline;
  std::vector<LegendEntry> legend_inferred;
  Json extras = Json::object();
  friend bool operator==(const InterpretationResult&, const InterpretationResult&) = default;

  const AnimationUnit* find_unit(std::string_view unit_id) const;
  AnimationUnit* find_unit(std::string_view unit_id);
};

enum class ConfidenceBucket { low, medium, high };

// Value ranges used when a backend omits a slider's min/max.
struct SliderRange {
  double min;
  double max;
};

struct ParseOptions {
  SliderRange amplitude{0.0, 2.0};
  SliderRange directional_bias{0.5, 1.5};
  SliderRange timing{0.5, 1.5};
};

std::string_view to_string(ModifierProperty v);
std::string_view to_string(ModifierScope v);
std::string_view to_string(SliderKind v);
std::string_view to_string(EditableField v);
std::string_view to_string(ConfidenceBucket v);
std::optional<EditableField> editable_field_from_string(std::string_view name);

// Finds the first balanced {...} in `raw` that parses as a JSON object.
// Code fences and surrounding prose are skipped. Throws NoJsonFound.
Json extract_json_object(std::string_view raw);

// Extract + validate. Throws NoJsonFound, SchemaViolation (details.path names
// the offending location, e.g. "units[0].confidence") or DuplicateUnitId.
InterpretationResult parse_interpretation(std::string_view raw, const ParseOptions& options = {});
InterpretationResult interpretation_from_json(const Json& root, const ParseOptions& options = {});

Json to_json(const InterpretationResult& result);
Json to_json(const AnimationUnit& unit);
// Canonical text form: sorted keys, two-space indent, trailing newline.
std::string serialize(const InterpretationResult& result);

// Re-checks every invariant on an in-memory value (throws like the parser).
void validate(const InterpretationResult& result);

// c < 0.4 low, c < 0.75 medium, else high. Throws OutOfRange outside [0, 1].
ConfidenceBucket bucket_confidence(double confidence);

// Display label for tags, e.g. "hair_drag" -> "hair drag".
std::string unit_label(const AnimationUnit& unit);

// A partial edit. An empty string clears a triplet field.
struct UnitEdit {
  std::optional<std::string> source;
  std::optional<std::string> path;
  std::optional<std::string> target;
  std::optional<std::string> summary;

  bool empty() const noexcept { return !source && !path && !target && !summary; }
};

// Throws UnknownUnit, EmptyTriplet, InvalidEdit.
InterpretationResult apply_unit_edit(const InterpretationResult& result, std::string_view unit_id,
                                     const UnitEdit& edit);

// Clamps into [min, max]. Throws UnknownUnit, UnknownSlider, InvalidArgument (NaN).
InterpretationResult set_slider(const InterpretationResult& result, std::string_view unit_id,
                                std::string_view slider_id, double value);

struct PinnedEdit {
  std::string unit_id;
  EditableField field;
  std::string value;  // empty when the user cleared the field
  friend bool operator==(const PinnedEdit&, const PinnedEdit&) = default;
};

// Every user-asserted field, in unit order then field order.
std::vector<PinnedEdit> pinned_edits(const InterpretationResult& result);

}  // namespace notana
