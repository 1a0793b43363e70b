#include "notana/intent.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <set>

#include "notana/error.hpp"

namespace notana {

namespace {

constexpr std::array<std::pair<ModifierProperty, std::string_view>, 7> kProperties{{
    {ModifierProperty::color, "color"},
    {ModifierProperty::thickness, "thickness"},
    {ModifierProperty::text, "text"},
    {ModifierProperty::number, "number"},
    {ModifierProperty::letter, "letter"},
    {ModifierProperty::style, "style"},
    {ModifierProperty::other, "other"},
}};

constexpr std::array<std::pair<ModifierScope, std::string_view>, 4> kScopes{{
    {ModifierScope::source, "source"},
    {ModifierScope::path, "path"},
    {ModifierScope::target, "target"},
    {ModifierScope::unit, "unit"},
}};

constexpr std::array<std::pair<SliderKind, std::string_view>, 3> kKinds{{
    {SliderKind::amplitude, "amplitude"},
    {SliderKind::directional_bias, "directional_bias"},
    {SliderKind::timing, "timing"},
}};

// Spellings seen in model output for the three slider families.
constexpr std::array<std::pair<std::string_view, SliderKind>, 9> kKindAliases{{
    {"amplitude_geometry", SliderKind::amplitude},
    {"geometry", SliderKind::amplitude},
    {"amplitude/geometry", SliderKind::amplitude},
    {"bias", SliderKind::directional_bias},
    {"directional", SliderKind::directional_bias},
    {"direction_bias", SliderKind::directional_bias},
    {"timing_energy", SliderKind::timing},
    {"timing/energy", SliderKind::timing},
    {"energy", SliderKind::timing},
}};

constexpr std::array<std::pair<EditableField, std::string_view>, 4> kFields{{
    {EditableField::source, "source"},
    {EditableField::path, "path"},
    {EditableField::target, "target"},
    {EditableField::summary, "summary"},
}};

template <typename Enum, std::size_t N>
std::string_view name_of(const std::array<std::pair<Enum, std::string_view>, N>& table, Enum v) {
  for (const auto& [key, name] : table) {
    if (key == v) return name;
  }
  return "?";
}

std::string normalize_token(std::string_view raw) {
  std::string out;
  for (char c : raw) {
    if (c == ' ' || c == '-') {
      out.push_back('_');
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  while (!out.empty() && out.front() == '_') out.erase(out.begin());
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Type-checked access to one JSON object, remembering its location for errors.
class ObjectReader {
 public:
  ObjectReader(const Json& value, std::string path) : value_(value), path_(std::move(path)) {
    if (!value_.is_object()) throw_schema_violation(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string child(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

  const Json* get(std::string_view key) {
    seen_.insert(std::string(key));
    auto it = value_.find(key);
    if (it == value_.end()) return nullptr;
    return &*it;
  }

  const Json& require(std::string_view key) {
    const Json* v = get(key);
    if (v == nullptr) throw_schema_violation(child(key), "missing required key");
    return *v;
  }

  // First present alias wins; all aliases are consumed.
  const Json* get_any(std::initializer_list<std::string_view> keys) {
    const Json* found = nullptr;
    for (auto key : keys) {
      const Json* v = get(key);
      if (found == nullptr && v != nullptr) found = v;
    }
    return found;
  }

  std::string string(std::string_view key, const Json& v) const {
    if (!v.is_string()) throw_schema_violation(child(key), "expected a string");
    return v.get<std::string>();
  }

  std::optional<std::string> optional_string(std::string_view key) {
    const Json* v = get(key);
    if (v == nullptr || v->is_null()) return std::nullopt;
    return string(key, *v);
  }

  double number(std::string_view key, const Json& v) const {
    if (!v.is_number()) throw_schema_violation(child(key), "expected a number");
    return v.get<double>();
  }

  // Everything not read through this reader.
  Json extras() const {
    Json out = Json::object();
    for (auto it = value_.begin(); it != value_.end(); ++it) {
      if (!seen_.contains(it.key())) out[it.key()] = it.value();
    }
    return out;
  }

 private:
  const Json& value_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

const Json& require_array(const Json& v, const std::string& path) {
  if (!v.is_array()) throw_schema_violation(path, "expected an array");
  return v;
}

std::string indexed(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

std::string id_string(const Json& v, const std::string& path) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw_schema_violation(path, "expected a string or integer id");
}

RoiBBox parse_bbox(const Json& v, const std::string& path) {
  require_array(v, path);
  if (v.size() != 4) throw_schema_violation(path, "expected [x_min, y_min, x_max, y_max]");
  std::array<double, 4> c{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!v[i].is_number()) throw_schema_violation(indexed(path, i), "expected a number");
    c[i] = v[i].get<double>();
  }
  return {c[0], c[1], c[2], c[3]};
}

template <typename Enum, std::size_t N>
Enum parse_enum(const std::array<std::pair<Enum, std::string_view>, N>& table, const Json& v,
                const std::string& path) {
  if (!v.is_string()) throw_schema_violation(path, "expected a string");
  const std::string token = normalize_token(v.get<std::string>());
  for (const auto& [key, name] : table) {
    if (name == token) return key;
  }
  std::string allowed;
  for (const auto& entry : table) allowed += (allowed.empty() ? "" : "|") + std::string(entry.second);
  throw_schema_violation(path, "'" + v.get<std::string>() + "' is not one of " + allowed);
}

SliderKind parse_kind(const Json& v, const std::string& path) {
  if (v.is_string()) {
    const std::string token = normalize_token(v.get<std::string>());
    for (const auto& [alias, kind] : kKindAliases) {
      if (alias == token) return kind;
    }
  }
  return parse_enum(kKinds, v, path);
}

SliderRange default_range(SliderKind kind, const ParseOptions& options) {
  switch (kind) {
    case SliderKind::amplitude: return options.amplitude;
    case SliderKind::directional_bias: return options.directional_bias;
    case SliderKind::timing: return options.timing;
  }
  return options.amplitude;
}

SecondaryModifier parse_modifier(const Json& v, const std::string& path) {
  ObjectReader r(v, path);
  SecondaryModifier m;
  m.property = parse_enum(kProperties, r.require("property"), r.child("property"));
  const Json& value = r.require("value");
  if (value.is_number() || value.is_boolean()) {
    m.value = value.dump();
  } else {
    m.value = r.string("value", value);
  }
  m.intended_meaning = r.optional_string("intended_meaning").value_or("");
  m.scope = parse_enum(kScopes, r.require("scope"), r.child("scope"));
  m.extras = r.extras();
  return m;
}

DimensionSlider parse_slider(const Json& v, const std::string& path, std::size_t index,
                             const ParseOptions& options) {
  ObjectReader r(v, path);
  DimensionSlider s;
  if (const Json* id = r.get("id"); id != nullptr && !id->is_null()) {
    s.id = id_string(*id, r.child("id"));
  } else {
    s.id = "s" + std::to_string(index + 1);
  }
  const Json* label = r.get_any({"label", "name"});
  if (label == nullptr) throw_schema_violation(r.child("label"), "missing required key");
  s.label = r.string("label", *label);
  const Json* kind = r.get_any({"kind", "type"});
  s.kind = kind == nullptr ? SliderKind::amplitude : parse_kind(*kind, r.child("kind"));
  const SliderRange range = default_range(s.kind, options);
  const Json* min = r.get("min");
  const Json* max = r.get("max");
  s.min = min == nullptr ? range.min : r.number("min", *min);
  s.max = max == nullptr ? range.max : r.number("max", *max);
  const Json* def = r.get("default");
  s.default_value = def == nullptr ? 1.0 : r.number("default", *def);
  const Json* value = r.get("value");
  s.value = value == nullptr || value->is_null() ? s.default_value : r.number("value", *value);
  s.min_anchor = r.optional_string("min_anchor");
  s.max_anchor = r.optional_string("max_anchor");
  s.extras = r.extras();
  return s;
}

AnimationUnit parse_unit(const Json& v, const std::string& path, std::size_t index, const ParseOptions& options) {
  ObjectReader r(v, path);
  AnimationUnit u;
  if (const Json* id = r.get("id"); id != nullptr && !id->is_null()) {
    u.id = id_string(*id, r.child("id"));
  } else {
    u.id = "u" + std::to_string(index + 1);
  }
  u.tag_color = r.optional_string("color").value_or("");
  u.roi = parse_bbox(r.require("roi_bbox"), r.child("roi_bbox"));

  {
    ObjectReader p(r.require("primary"), r.child("primary"));
    auto field = [&p](std::string_view key) -> std::optional<std::string> {
      auto s = p.optional_string(key);
      if (s && trim(*s).empty()) return std::nullopt;
      return s;
    };
    u.primary.source = field("source");
    u.primary.path = field("path");
    u.primary.target = field("target");
    u.primary.extras = p.extras();
  }

  if (const Json* mods = r.get("secondary_modifiers"); mods != nullptr && !mods->is_null()) {
    const std::string mpath = r.child("secondary_modifiers");
    require_array(*mods, mpath);
    for (std::size_t i = 0; i < mods->size(); ++i) u.modifiers.push_back(parse_modifier((*mods)[i], indexed(mpath, i)));
  }

  if (const Json* order = r.get("temporal_order"); order != nullptr && !order->is_null()) {
    const std::string opath = r.child("temporal_order");
    if (order->is_number_integer()) {
      u.temporal_order = order->get<std::int64_t>();
    } else if (order->is_number_float() && std::floor(order->get<double>()) == order->get<double>()) {
      u.temporal_order = static_cast<std::int64_t>(order->get<double>());
    } else {
      throw_schema_violation(opath, "expected an integer or null");
    }
  }

  u.confidence = r.number("confidence", r.require("confidence"));
  u.summary = r.string("natural_language_summary", r.require("natural_language_summary"));

  {
    const std::string spath = r.child("sliders");
    const Json& sliders = require_array(r.require("sliders"), spath);
    for (std::size_t i = 0; i < sliders.size(); ++i) {
      u.sliders.push_back(parse_slider(sliders[i], indexed(spath, i), i, options));
    }
  }

  if (const Json* edited = r.get("edited_fields"); edited != nullptr) {
    const std::string epath = r.child("edited_fields");
    require_array(*edited, epath);
    for (std::size_t i = 0; i < edited->size(); ++i) {
      u.edited_fields.push_back(parse_enum(kFields, (*edited)[i], indexed(epath, i)));
    }
  }
  if (const Json* pin = r.get("pin_enforced"); pin != nullptr) {
    if (!pin->is_boolean()) throw_schema_violation(r.child("pin_enforced"), "expected a boolean");
    u.pin_enforced = pin->get<bool>();
  }
  u.extras = r.extras();
  return u;
}

LegendEntry parse_legend(const Json& v, const std::string& path) {
  LegendEntry e;
  if (v.is_string()) {
    // "red = paths" shorthand.
    const std::string text = v.get<std::string>();
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      e.cue = trim(text);
    } else {
      e.cue = trim(std::string_view(text).substr(0, eq));
      e.meaning = trim(std::string_view(text).substr(eq + 1));
    }
    return e;
  }
  ObjectReader r(v, path);
  e.cue = r.string("cue", r.require("cue"));
  e.meaning = r.optional_string("meaning").value_or("");
  e.extras = r.extras();
  return e;
}

void check_grid_bbox(const RoiBBox& b, const std::string& path) {
  const std::array<std::pair<double, const char*>, 4> parts{
      {{b.x_min, "x_min"}, {b.y_min, "y_min"}, {b.x_max, "x_max"}, {b.y_max, "y_max"}}};
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!is_grid_component(parts[i].first)) {
      throw_schema_violation(indexed(path, i), std::string(parts[i].second) +
                                                   " must lie in [0, 30] on a half-cell step");
    }
  }
  if (b.x_min > b.x_max) throw_schema_violation(path, "x_min > x_max");
  if (b.y_min > b.y_max) throw_schema_violation(path, "y_min > y_max");
}

void check_slider(const DimensionSlider& s, const std::string& path) {
  if (s.id.empty()) throw_schema_violation(path + ".id", "empty slider id");
  if (trim(s.label).empty()) throw_schema_violation(path + ".label", "empty label");
  for (double v : {s.min, s.max, s.default_value, s.value}) {
    if (!std::isfinite(v)) throw_schema_violation(path, "non-finite slider value");
  }
  if (s.min > s.max) throw_schema_violation(path + ".min", "min > max");
  if (s.default_value != 1.0) throw_schema_violation(path + ".default", "sliders are neutral: default must be 1.0");
  if (s.default_value < s.min || s.default_value > s.max) {
    throw_schema_violation(path + ".default", "default outside [min, max]");
  }
  if (s.value < s.min || s.value > s.max) throw_schema_violation(path + ".value", "value outside [min, max]");
  if (s.kind == SliderKind::directional_bias && (s.min < 0.5 || s.max > 1.5)) {
    throw_schema_violation(path, "directional_bias range must lie within [0.5, 1.5]");
  }
}

void check_unit(const AnimationUnit& u, const std::string& path) {
  if (u.id.empty()) throw_schema_violation(path + ".id", "empty unit id");
  check_grid_bbox(u.roi, path + ".roi_bbox");
  if (u.primary.present_count() == 0) {
    throw_schema_violation(path + ".primary", "at least one of source, path, target is required");
  }
  for (const auto* f : {&u.primary.source, &u.primary.path, &u.primary.target}) {
    if (f->has_value() && trim(**f).empty()) throw_schema_violation(path + ".primary", "empty triplet field");
  }
  for (std::size_t i = 0; i < u.modifiers.size(); ++i) {
    if (trim(u.modifiers[i].value).empty()) {
      throw_schema_violation(indexed(path + ".secondary_modifiers", i) + ".value", "empty value");
    }
  }
  if (u.temporal_order && *u.temporal_order < 0) throw_schema_violation(path + ".temporal_order", "negative order");
  if (!(u.confidence >= 0.0 && u.confidence <= 1.0)) {
    throw_schema_violation(path + ".confidence", "confidence must lie in [0, 1]");
  }
  if (trim(u.summary).empty()) throw_schema_violation(path + ".natural_language_summary", "empty summary");
  if (u.sliders.empty() || u.sliders.size() > 3) {
    throw_schema_violation(path + ".sliders", "expected 1-3 sliders, got " + std::to_string(u.sliders.size()));
  }
  std::set<std::string, std::less<>> slider_ids;
  for (std::size_t i = 0; i < u.sliders.size(); ++i) {
    const std::string spath = indexed(path + ".sliders", i);
    check_slider(u.sliders[i], spath);
    if (!slider_ids.insert(u.sliders[i].id).second) throw_schema_violation(spath + ".id", "duplicate slider id");
  }
  if (!std::is_sorted(u.edited_fields.begin(), u.edited_fields.end()) ||
      std::adjacent_find(u.edited_fields.begin(), u.edited_fields.end()) != u.edited_fields.end()) {
    throw_schema_violation(path + ".edited_fields", "must be sorted and unique");
  }
}

Json bbox_json(const RoiBBox& b) { return Json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

Json optional_json(const std::optional<std::string>& v) { return v ? Json(*v) : Json(nullptr); }

Json slider_json(const DimensionSlider& s) {
  Json out = s.extras;
  out["id"] = s.id;
  out["label"] = s.label;
  out["kind"] = to_string(s.kind);
  out["min"] = s.min;
  out["max"] = s.max;
  out["default"] = s.default_value;
  out["value"] = s.value;
  if (s.min_anchor) out["min_anchor"] = *s.min_anchor;
  if (s.max_anchor) out["max_anchor"] = *s.max_anchor;
  return out;
}

}  // namespace

int PrimaryTriplet::present_count() const noexcept {
  return static_cast<int>(source.has_value()) + static_cast<int>(path.has_value()) +
         static_cast<int>(target.has_value());
}

const DimensionSlider* AnimationUnit::find_slider(std::string_view slider_id) const {
  for (const auto& s : sliders) {
    if (s.id == slider_id) return &s;
  }
  return nullptr;
}

bool AnimationUnit::is_edited(EditableField field) const {
  return std::find(edited_fields.begin(), edited_fields.end(), field) != edited_fields.end();
}

std::optional<std::string> AnimationUnit::field_value(EditableField field) const {
  switch (field) {
    case EditableField::source: return primary.source;
    case EditableField::path: return primary.path;
    case EditableField::target: return primary.target;
    case EditableField::summary: return summary;
  }
  return std::nullopt;
}

const AnimationUnit* InterpretationResult::find_unit(std::string_view unit_id) const {
  for (const auto& u : units) {
    if (u.id == unit_id) return &u;
  }
  return nullptr;
}

AnimationUnit* InterpretationResult::find_unit(std::string_view unit_id) {
  for (auto& u : units) {
    if (u.id == unit_id) return &u;
  }
  return nullptr;
}

std::string_view to_string(ModifierProperty v) { return name_of(kProperties, v); }
std::string_view to_string(ModifierScope v) { return name_of(kScopes, v); }
std::string_view to_string(SliderKind v) { return name_of(kKinds, v); }
std::string_view to_string(EditableField v) { return name_of(kFields, v); }

std::string_view to_string(ConfidenceBucket v) {
  switch (v) {
    case ConfidenceBucket::low: return "low";
    case ConfidenceBucket::medium: return "medium";
    case ConfidenceBucket::high: return "high";
  }
  return "low";
}

std::optional<EditableField> editable_field_from_string(std::string_view name) {
  for (const auto& [field, n] : kFields) {
    if (n == name) return field;
  }
  return std::nullopt;
}

Json extract_json_object(std::string_view raw) {
  for (std::size_t start = raw.find('{'); start != std::string_view::npos; start = raw.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < raw.size(); ++i) {
      const char c = raw[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}' && --depth == 0) {
        Json parsed = Json::parse(raw.substr(start, i - start + 1), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) return parsed;
        break;
      }
    }
  }
  throw Error(Errc::NoJsonFound, "reply contains no balanced JSON object");
}

InterpretationResult interpretation_from_json(const Json& root, const ParseOptions& options) {
  ObjectReader r(root, "");
  InterpretationResult result;

  const Json& units = require_array(r.require("units"), "units");
  for (std::size_t i = 0; i < units.size(); ++i) {
    result.units.push_back(parse_unit(units[i], indexed("units", i), i, options));
  }

  if (const Json* marks = r.get("unassigned_marks"); marks != nullptr && !marks->is_null()) {
    require_array(*marks, "unassigned_marks");
    for (std::size_t i = 0; i < marks->size(); ++i) {
      const std::string path = indexed("unassigned_marks", i);
      ObjectReader m((*marks)[i], path);
      UnassignedMark mark;
      mark.note = m.optional_string("note").value_or("");
      const Json* bbox = m.get_any({"bbox", "roi_bbox"});
      if (bbox == nullptr) throw_schema_violation(m.child("bbox"), "missing required key");
      mark.bbox = parse_bbox(*bbox, m.child("bbox"));
      mark.extras = m.extras();
      result.unassigned_marks.push_back(std::move(mark));
    }
  }

  if (const Json* timeline = r.get("global_timeline"); timeline != nullptr && !timeline->is_null()) {
    require_array(*timeline, "global_timeline");
    for (std::size_t i = 0; i < timeline->size(); ++i) {
      result.global_timeline.push_back(id_string((*timeline)[i], indexed("global_timeline", i)));
    }
  }

  if (const Json* legend = r.get("legend_inferred"); legend != nullptr && !legend->is_null()) {
    if (legend->is_object()) {
      // {"red": "paths"} form.
      for (auto it = legend->begin(); it != legend->end(); ++it) {
        result.legend_inferred.push_back(
            {it.key(), it.value().is_string() ? it.value().get<std::string>() : it.value().dump(), Json::object()});
      }
    } else {
      require_array(*legend, "legend_inferred");
      for (std::size_t i = 0; i < legend->size(); ++i) {
        result.legend_inferred.push_back(parse_legend((*legend)[i], indexed("legend_inferred", i)));
      }
    }
  }

  result.extras = r.extras();
  validate(result);
  return result;
}

InterpretationResult parse_interpretation(std::string_view raw, const ParseOptions& options) {
  return interpretation_from_json(extract_json_object(raw), options);
}

void validate(const InterpretationResult& result) {
  std::set<std::string, std::less<>> ids;
  std::set<std::string, std::less<>> colors;
  for (std::size_t i = 0; i < result.units.size(); ++i) {
    const auto& u = result.units[i];
    const std::string path = indexed("units", i);
    check_unit(u, path);
    if (!ids.insert(u.id).second) {
      throw Error(Errc::DuplicateUnitId, "unit id '" + u.id + "' appears more than once",
                  {{"path", path + ".id"}, {"id", u.id}});
    }
    if (!u.tag_color.empty() && !colors.insert(u.tag_color).second) {
      throw_schema_violation(path + ".color", "color '" + u.tag_color + "' is not unique");
    }
  }
  for (std::size_t i = 0; i < result.unassigned_marks.size(); ++i) {
    check_grid_bbox(result.unassigned_marks[i].bbox, indexed("unassigned_marks", i) + ".bbox");
  }
  std::set<std::string, std::less<>> listed;
  for (std::size_t i = 0; i < result.global_timeline.size(); ++i) {
    const auto& id = result.global_timeline[i];
    const std::string path = indexed("global_timeline", i);
    if (!ids.contains(id)) throw_schema_violation(path, "unknown unit id '" + id + "'");
    if (!listed.insert(id).second) throw_schema_violation(path, "unit id '" + id + "' listed twice");
  }
  for (std::size_t i = 0; i < result.legend_inferred.size(); ++i) {
    if (trim(result.legend_inferred[i].cue).empty()) {
      throw_schema_violation(indexed("legend_inferred", i) + ".cue", "empty cue");
    }
  }
}

Json to_json(const AnimationUnit& u) {
  Json out = u.extras;
  out["id"] = u.id;
  if (!u.tag_color.empty()) out["color"] = u.tag_color;
  out["roi_bbox"] = bbox_json(u.roi);
  Json primary = u.primary.extras;
  primary["source"] = optional_json(u.primary.source);
  primary["path"] = optional_json(u.primary.path);
  primary["target"] = optional_json(u.primary.target);
  out["primary"] = std::move(primary);
  Json mods = Json::array();
  for (const auto& m : u.modifiers) {
    Json mj = m.extras;
    mj["property"] = to_string(m.property);
    mj["value"] = m.value;
    mj["intended_meaning"] = m.intended_meaning;
    mj["scope"] = to_string(m.scope);
    mods.push_back(std::move(mj));
  }
  out["secondary_modifiers"] = std::move(mods);
  out["temporal_order"] = u.temporal_order ? Json(*u.temporal_order) : Json(nullptr);
  out["confidence"] = u.confidence;
  out["natural_language_summary"] = u.summary;
  Json sliders = Json::array();
  for (const auto& s : u.sliders) sliders.push_back(slider_json(s));
  out["sliders"] = std::move(sliders);
  if (!u.edited_fields.empty()) {
    Json edited = Json::array();
    for (auto f : u.edited_fields) edited.push_back(to_string(f));
    out["edited_fields"] = std::move(edited);
  }
  if (u.pin_enforced) out["pin_enforced"] = true;
  return out;
}

Json to_json(const InterpretationResult& result) {
  Json out = result.extras;
  Json units = Json::array();
  for (const auto& u : result.units) units.push_back(to_json(u));
  out["units"] = std::move(units);
  Json marks = Json::array();
  for (const auto& m : result.unassigned_marks) {
    Json mj = m.extras;
    mj["note"] = m.note;
    mj["bbox"] = bbox_json(m.bbox);
    marks.push_back(std::move(mj));
  }
  out["unassigned_marks"] = std::move(marks);
  out["global_timeline"] = result.global_timeline;
  Json legend = Json::array();
  for (const auto& e : result.legend_inferred) {
    Json ej = e.extras;
    ej["cue"] = e.cue;
    ej["meaning"] = e.meaning;
    legend.push_back(std::move(ej));
  }
  out["legend_inferred"] = std::move(legend);
  return out;
}

std::string serialize(const InterpretationResult& result) { return to_json(result).dump(2) + "\n"; }

ConfidenceBucket bucket_confidence(double confidence) {
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw Error(Errc::OutOfRange, "confidence must lie in [0, 1]", {{"value", confidence}});
  }
  if (confidence < 0.4) return ConfidenceBucket::low;
  if (confidence < 0.75) return ConfidenceBucket::medium;
  return ConfidenceBucket::high;
}

std::string unit_label(const AnimationUnit& unit) {
  std::string out = unit.id;
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

InterpretationResult apply_unit_edit(const InterpretationResult& result, std::string_view unit_id,
                                     const UnitEdit& edit) {
  InterpretationResult out = result;
  AnimationUnit* unit = out.find_unit(unit_id);
  if (unit == nullptr) throw Error(Errc::UnknownUnit, "no unit '" + std::string(unit_id) + "'");

  auto mark = [unit](EditableField f) {
    auto it = std::lower_bound(unit->edited_fields.begin(), unit->edited_fields.end(), f);
    if (it == unit->edited_fields.end() || *it != f) unit->edited_fields.insert(it, f);
  };
  auto apply_triplet = [&](const std::optional<std::string>& value, std::optional<std::string>& slot,
                           EditableField f) {
    if (!value) return;
    const std::string cleaned = trim(*value);
    if (cleaned.empty()) {
      slot.reset();
    } else {
      slot = *value;
    }
    mark(f);
  };
  apply_triplet(edit.source, unit->primary.source, EditableField::source);
  apply_triplet(edit.path, unit->primary.path, EditableField::path);
  apply_triplet(edit.target, unit->primary.target, EditableField::target);
  if (unit->primary.present_count() == 0) {
    throw Error(Errc::EmptyTriplet, "an edit may not clear source, path and target together",
                {{"unit_id", std::string(unit_id)}});
  }
  if (edit.summary) {
    if (trim(*edit.summary).empty()) {
      throw Error(Errc::InvalidEdit, "summary cannot be cleared", {{"unit_id", std::string(unit_id)}});
    }
    unit->summary = *edit.summary;
    mark(EditableField::summary);
  }
  return out;
}

InterpretationResult set_slider(const InterpretationResult& result, std::string_view unit_id,
                                std::string_view slider_id, double value) {
  if (std::isnan(value)) throw Error(Errc::InvalidArgument, "slider value is NaN");
  InterpretationResult out = result;
  AnimationUnit* unit = out.find_unit(unit_id);
  if (unit == nullptr) throw Error(Errc::UnknownUnit, "no unit '" + std::string(unit_id) + "'");
  for (auto& s : unit->sliders) {
    if (s.id == slider_id) {
      s.value = std::clamp(value, s.min, s.max);
      return out;
    }
  }
  throw Error(Errc::UnknownSlider, "unit '" + std::string(unit_id) + "' has no slider '" + std::string(slider_id) + "'");
}

std::vector<PinnedEdit> pinned_edits(const InterpretationResult& result) {
  std::vector<PinnedEdit> out;
  for (const auto& u : result.units) {
    for (auto f : u.edited_fields) out.push_back({u.id, f, u.field_value(f).value_or("")});
  }
  return out;
}

}  // namespace notana
