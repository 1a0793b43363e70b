#include "notana/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "notana/error.hpp"

namespace notana {

using nlohmann::json;

namespace {

// Smallest "<prefix><n>" not yet used, n >= 1.
template <typename Range, typename Proj>
std::string fresh_id(const Range& items, std::string_view prefix, Proj proj) {
  long max_seen = 0;
  for (const auto& item : items) {
    const std::string& id = proj(item);
    if (id.size() > prefix.size() && id.compare(0, prefix.size(), prefix) == 0) {
      char* end = nullptr;
      const long n = std::strtol(id.c_str() + prefix.size(), &end, 10);
      if (end != nullptr && *end == '\0') max_seen = std::max(max_seen, n);
    }
  }
  return std::string(prefix) + std::to_string(max_seen + 1);
}

void sort_markers(Timeline& tl) {
  std::stable_sort(tl.markers.begin(), tl.markers.end(),
                   [](const KeyframeMarker& a, const KeyframeMarker& b) { return a.time < b.time; });
}

KeyframeMarker* marker_at(Timeline& tl, double time) {
  for (auto& m : tl.markers) {
    if (m.time == time) return &m;
  }
  return nullptr;
}

bool other_block_ends_at(const Timeline& tl, std::string_view block_id, double time) {
  return std::any_of(tl.blocks.begin(), tl.blocks.end(),
                     [&](const Block& b) { return b.id != block_id && b.end() == time; });
}

void ensure_marker(Timeline& tl, double time) {
  if (marker_at(tl, time) != nullptr) return;
  KeyframeMarker m;
  m.id = fresh_id(tl.markers, "k", [](const KeyframeMarker& k) -> const std::string& { return k.id; });
  m.time = time;
  tl.markers.push_back(std::move(m));
}

// The block's old end is losing this block. Drop or orphan an exclusive marker.
void release_end(Timeline& tl, std::string_view block_id, double old_end) {
  if (other_block_ends_at(tl, block_id, old_end)) return;
  auto it = std::find_if(tl.markers.begin(), tl.markers.end(), [&](const KeyframeMarker& m) { return m.time == old_end; });
  if (it == tl.markers.end()) return;
  if (it->status == MarkerStatus::generated) {
    it->orphaned = true;
  } else {
    tl.markers.erase(it);
  }
}

Block& require_block(Timeline& tl, std::string_view id) {
  for (auto& b : tl.blocks) {
    if (b.id == id) return b;
  }
  throw Error(Errc::UnknownBlock, "no block '" + std::string(id) + "'");
}

void check_start(double start) {
  if (!std::isfinite(start) || start < 0.0) throw Error(Errc::NegativeStart, "block start must be >= 0", {{"start", start}});
}

void check_duration(double duration) {
  if (!std::isfinite(duration) || duration <= 0.0) {
    throw Error(Errc::NonPositiveDuration, "block duration must be > 0", {{"duration", duration}});
  }
}

// Moves the block's end from old_end to its current end, carrying an exclusive
// placeholder marker along.
void retime(Timeline& tl, const Block& block, double old_end) {
  const double new_end = block.end();
  if (old_end == new_end) return;
  const bool shared = other_block_ends_at(tl, block.id, old_end);
  KeyframeMarker* old_marker = marker_at(tl, old_end);
  if (!shared && old_marker != nullptr && old_marker->status == MarkerStatus::placeholder) {
    if (marker_at(tl, new_end) != nullptr) {
      const std::string id = old_marker->id;
      std::erase_if(tl.markers, [&](const KeyframeMarker& m) { return m.id == id; });
    } else {
      old_marker->time = new_end;
    }
  } else {
    if (!shared && old_marker != nullptr) old_marker->orphaned = true;
    ensure_marker(tl, new_end);
  }
  if (KeyframeMarker* m = marker_at(tl, new_end)) m->orphaned = false;
  sort_markers(tl);
}

}  // namespace

const Track* Timeline::find_track(std::string_view id) const {
  for (const auto& t : tracks) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

const Block* Timeline::find_block(std::string_view id) const {
  for (const auto& b : blocks) {
    if (b.id == id) return &b;
  }
  return nullptr;
}

const KeyframeMarker* Timeline::find_marker(std::string_view id) const {
  for (const auto& m : markers) {
    if (m.id == id) return &m;
  }
  return nullptr;
}

const Track* Timeline::track_of(const Block& block) const { return find_track(block.track_id); }

std::vector<DecompositionEntry> parse_decomposition(std::string_view raw) {
  json root;
  const auto first = raw.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && raw[first] == '[') {
    root = json::parse(raw.substr(first), nullptr, false);
    if (root.is_discarded()) throw Error(Errc::NoJsonFound, "decomposition reply is not valid JSON");
  } else {
    root = extract_json_object(raw);
    if (!root.contains("decomposition")) throw_schema_violation("decomposition", "missing required key");
    root = root["decomposition"];
  }
  if (!root.is_array()) throw_schema_violation("decomposition", "expected an array");
  std::vector<DecompositionEntry> out;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const std::string path = "decomposition[" + std::to_string(i) + "]";
    const json& e = root[i];
    if (!e.is_object()) throw_schema_violation(path, "expected an object");
    auto text = [&](const char* key, bool required) -> std::string {
      if (!e.contains(key) || e[key].is_null()) {
        if (required) throw_schema_violation(path + "." + key, "missing required key");
        return {};
      }
      if (e[key].is_number_integer() && std::string_view(key) == "unit_id") return std::to_string(e[key].get<long>());
      if (!e[key].is_string()) throw_schema_violation(path + "." + key, "expected a string");
      return e[key].get<std::string>();
    };
    DecompositionEntry entry{text("unit_id", true), text("part_name", true), text("verb", true),
                             text("description", false)};
    if (entry.part_name.empty()) throw_schema_violation(path + ".part_name", "empty part name");
    out.push_back(std::move(entry));
  }
  return out;
}

json to_json(const std::vector<DecompositionEntry>& entries) {
  json arr = json::array();
  for (const auto& e : entries) {
    arr.push_back({{"unit_id", e.unit_id}, {"part_name", e.part_name}, {"verb", e.verb}, {"description", e.description}});
  }
  return {{"decomposition", arr}};
}

Timeline build_timeline(const InterpretationResult& result, const std::vector<DecompositionEntry>& decomposition) {
  for (const auto& e : decomposition) {
    if (result.find_unit(e.unit_id) == nullptr) {
      throw Error(Errc::UnknownUnitInDecomposition, "decomposition names unknown unit '" + e.unit_id + "'",
                  {{"unit_id", e.unit_id}});
    }
  }
  std::set<std::string, std::less<>> decomposed;
  for (const auto& e : decomposition) decomposed.insert(e.unit_id);

  // Ordered unit sequence; each element is a slot of units starting together.
  std::vector<std::vector<const AnimationUnit*>> slots;
  if (!result.global_timeline.empty()) {
    std::set<std::string, std::less<>> listed(result.global_timeline.begin(), result.global_timeline.end());
    for (const auto& id : result.global_timeline) slots.push_back({result.find_unit(id)});
    for (const auto& u : result.units) {
      if (!listed.contains(u.id)) slots.push_back({&u});
    }
  } else {
    std::map<std::int64_t, std::vector<const AnimationUnit*>> ordered;
    std::vector<const AnimationUnit*> unordered;
    for (const auto& u : result.units) {
      if (u.temporal_order) {
        ordered[*u.temporal_order].push_back(&u);
      } else {
        unordered.push_back(&u);
      }
    }
    for (auto& [order, units] : ordered) slots.push_back(units);
    for (const auto* u : unordered) slots.push_back({u});
  }

  std::map<std::string, double, std::less<>> unit_start;
  double next = 0.0;
  for (const auto& slot : slots) {
    bool used = false;
    for (const auto* u : slot) {
      if (decomposed.contains(u->id)) {
        unit_start[u->id] = next;
        used = true;
      }
    }
    if (used) next += kUnitOffsetBeats;
  }

  Timeline tl;
  std::map<std::pair<std::string, std::string>, std::string> track_ids;
  for (const auto& e : decomposition) {
    const AnimationUnit* unit = result.find_unit(e.unit_id);
    auto key = std::make_pair(e.unit_id, e.part_name);
    auto it = track_ids.find(key);
    if (it == track_ids.end()) {
      Track t{"t" + std::to_string(tl.tracks.size() + 1), e.part_name, e.unit_id, unit->tag_color};
      it = track_ids.emplace(key, t.id).first;
      tl.tracks.push_back(std::move(t));
    }
    Block b;
    b.id = "b" + std::to_string(tl.blocks.size() + 1);
    b.track_id = it->second;
    b.label = e.verb.empty() ? e.part_name : e.part_name + " " + e.verb;
    b.start = unit_start.at(e.unit_id);
    b.duration = kDefaultBlockBeats;
    b.description = e.description;
    tl.blocks.push_back(std::move(b));
  }

  std::set<double> ends;
  for (const auto& b : tl.blocks) ends.insert(b.end());
  for (double t : ends) {
    KeyframeMarker m;
    m.id = "k" + std::to_string(tl.markers.size() + 1);
    m.time = t;
    tl.markers.push_back(std::move(m));
  }
  return tl;
}

Timeline move_block(const Timeline& timeline, std::string_view block_id, double new_start) {
  Timeline tl = timeline;
  Block& b = require_block(tl, block_id);
  check_start(new_start);
  const double old_end = b.end();
  b.start = new_start;
  const Block copy = b;
  retime(tl, copy, old_end);
  return tl;
}

Timeline resize_block(const Timeline& timeline, std::string_view block_id, double new_duration) {
  Timeline tl = timeline;
  Block& b = require_block(tl, block_id);
  check_duration(new_duration);
  const double old_end = b.end();
  b.duration = new_duration;
  const Block copy = b;
  retime(tl, copy, old_end);
  return tl;
}

Timeline delete_block(const Timeline& timeline, std::string_view block_id) {
  Timeline tl = timeline;
  const Block b = require_block(tl, block_id);
  release_end(tl, b.id, b.end());
  std::erase_if(tl.blocks, [&](const Block& x) { return x.id == b.id; });
  return tl;
}

Timeline add_block(const Timeline& timeline, std::string_view track_id, std::string label, double start,
                   double duration, std::string description) {
  if (timeline.find_track(track_id) == nullptr) {
    throw Error(Errc::UnknownTrack, "no track '" + std::string(track_id) + "'");
  }
  check_start(start);
  check_duration(duration);
  Timeline tl = timeline;
  Block b;
  b.id = fresh_id(tl.blocks, "b", [](const Block& x) -> const std::string& { return x.id; });
  b.track_id = std::string(track_id);
  b.label = std::move(label);
  b.start = start;
  b.duration = duration;
  b.description = std::move(description);
  const double end = b.end();
  tl.blocks.push_back(std::move(b));
  ensure_marker(tl, end);
  if (KeyframeMarker* m = marker_at(tl, end)) m->orphaned = false;
  sort_markers(tl);
  return tl;
}

Timeline mark_generated(const Timeline& timeline, std::string_view marker_id, std::string frame_id) {
  Timeline tl = timeline;
  for (auto& m : tl.markers) {
    if (m.id == marker_id) {
      m.status = MarkerStatus::generated;
      m.frame_ref = std::move(frame_id);
      return tl;
    }
  }
  throw Error(Errc::InvalidArgument, "no marker '" + std::string(marker_id) + "'");
}

Timeline reopen_markers(const Timeline& timeline) {
  Timeline tl = timeline;
  for (auto& m : tl.markers) {
    if (m.status == MarkerStatus::generated && !m.orphaned) {
      m.status = MarkerStatus::placeholder;
      m.frame_ref.reset();
    }
  }
  return tl;
}

std::vector<ScheduleEntry> keyframe_schedule(const Timeline& timeline) {
  std::vector<ScheduleEntry> out;
  for (const auto& m : timeline.markers) {
    if (m.status != MarkerStatus::placeholder) continue;
    ScheduleEntry e;
    e.time = m.time;
    e.marker_id = m.id;
    for (const auto& b : timeline.blocks) {
      if (b.start <= m.time && m.time <= b.end()) e.active_blocks.push_back(b.id);
    }
    out.push_back(std::move(e));
  }
  std::stable_sort(out.begin(), out.end(), [](const ScheduleEntry& a, const ScheduleEntry& b) { return a.time < b.time; });
  return out;
}

std::vector<std::string> timeline_violations(const Timeline& tl) {
  std::vector<std::string> out;
  std::set<std::string, std::less<>> track_ids;
  for (const auto& t : tl.tracks) {
    if (!track_ids.insert(t.id).second) out.push_back("duplicate track id " + t.id);
  }
  std::set<std::string, std::less<>> block_ids;
  std::set<double> ends;
  for (const auto& b : tl.blocks) {
    if (!block_ids.insert(b.id).second) out.push_back("duplicate block id " + b.id);
    if (!track_ids.contains(b.track_id)) out.push_back("block " + b.id + " references missing track " + b.track_id);
    if (!(b.duration > 0)) out.push_back("block " + b.id + " has non-positive duration");
    if (!(b.start >= 0)) out.push_back("block " + b.id + " has negative start");
    ends.insert(b.end());
  }
  std::set<std::string, std::less<>> marker_ids;
  std::set<double> marker_times;
  for (std::size_t i = 0; i < tl.markers.size(); ++i) {
    const auto& m = tl.markers[i];
    if (!marker_ids.insert(m.id).second) out.push_back("duplicate marker id " + m.id);
    if (!marker_times.insert(m.time).second) out.push_back("two markers at time " + std::to_string(m.time));
    if (i > 0 && tl.markers[i - 1].time > m.time) out.push_back("markers not sorted at " + m.id);
    if (m.status == MarkerStatus::generated && !m.frame_ref) out.push_back("generated marker " + m.id + " lacks frame_ref");
    if (m.status == MarkerStatus::placeholder && !ends.contains(m.time)) {
      out.push_back("placeholder marker " + m.id + " is not at any block end");
    }
  }
  for (double e : ends) {
    if (!marker_times.contains(e)) out.push_back("block end " + std::to_string(e) + " has no marker");
  }
  return out;
}

std::optional<UnitSpan> unit_span(const Timeline& timeline, std::string_view unit_id) {
  std::optional<UnitSpan> span;
  for (const auto& b : timeline.blocks) {
    const Track* t = timeline.track_of(b);
    if (t == nullptr || t->unit_id != unit_id) continue;
    if (!span) {
      span = UnitSpan{b.start, b.end()};
    } else {
      span->start = std::min(span->start, b.start);
      span->end = std::max(span->end, b.end());
    }
  }
  return span;
}

json to_json(const Timeline& tl) {
  json tracks = json::array();
  for (const auto& t : tl.tracks) {
    tracks.push_back({{"id", t.id}, {"part_name", t.part_name}, {"unit_id", t.unit_id}, {"color", t.color}});
  }
  json blocks = json::array();
  for (const auto& b : tl.blocks) {
    blocks.push_back({{"id", b.id},
                      {"track_id", b.track_id},
                      {"label", b.label},
                      {"start", b.start},
                      {"duration", b.duration},
                      {"description", b.description}});
  }
  json markers = json::array();
  for (const auto& m : tl.markers) {
    json mj = {{"id", m.id},
               {"time", m.time},
               {"status", m.status == MarkerStatus::placeholder ? "placeholder" : "generated"},
               {"frame_ref", m.frame_ref ? json(*m.frame_ref) : json(nullptr)}};
    if (m.orphaned) mj["orphaned"] = true;
    markers.push_back(std::move(mj));
  }
  return {{"tracks", tracks}, {"blocks", blocks}, {"markers", markers}, {"beat_duration_hint", tl.beat_duration_hint}};
}

Timeline timeline_from_json(const json& j) {
  try {
    Timeline tl;
    for (const auto& t : j.at("tracks")) {
      tl.tracks.push_back({t.at("id").get<std::string>(), t.at("part_name").get<std::string>(),
                           t.at("unit_id").get<std::string>(), t.at("color").get<std::string>()});
    }
    for (const auto& b : j.at("blocks")) {
      tl.blocks.push_back({b.at("id").get<std::string>(), b.at("track_id").get<std::string>(),
                           b.at("label").get<std::string>(), b.at("start").get<double>(),
                           b.at("duration").get<double>(), b.value("description", std::string())});
    }
    for (const auto& m : j.at("markers")) {
      KeyframeMarker km;
      km.id = m.at("id").get<std::string>();
      km.time = m.at("time").get<double>();
      const std::string status = m.at("status").get<std::string>();
      if (status != "placeholder" && status != "generated") throw_schema_violation("timeline.markers", "bad status");
      km.status = status == "placeholder" ? MarkerStatus::placeholder : MarkerStatus::generated;
      if (m.contains("frame_ref") && m["frame_ref"].is_string()) km.frame_ref = m["frame_ref"].get<std::string>();
      km.orphaned = m.value("orphaned", false);
      tl.markers.push_back(std::move(km));
    }
    tl.beat_duration_hint = j.value("beat_duration_hint", 0.5);
    return tl;
  } catch (const json::exception& e) {
    throw Error(Errc::SerializationError, std::string("malformed timeline: ") + e.what());
  }
}

}  // namespace notana
