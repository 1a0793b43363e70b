#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "notana/timeline.hpp"
#include "support.hpp"

using namespace notana;
using nlohmann::json;

namespace {

std::vector<DecompositionEntry> run_decomposition() {
  return parse_decomposition(test::asset("demos/run/decomposition.json"));
}

Timeline run_timeline() { return build_timeline(test::run_result(), run_decomposition()); }

std::vector<double> marker_times(const Timeline& tl) {
  std::vector<double> out;
  for (const auto& m : tl.markers) out.push_back(m.time);
  return out;
}

AnimationUnit bare_unit(std::string id, std::optional<std::int64_t> order) {
  AnimationUnit u;
  u.id = std::move(id);
  u.temporal_order = order;
  return u;
}

}  // namespace

TEST_CASE("decomposition replies parse in both shapes") {
  CHECK(run_decomposition().size() == 7);
  const auto bare = parse_decomposition(R"(  [{"unit_id": 3, "part_name": "arm", "verb": "wave"}])");
  REQUIRE(bare.size() == 1);
  CHECK(bare[0].unit_id == "3");
  CHECK(bare[0].description.empty());
  CHECK(parse_decomposition(to_json(run_decomposition()).dump()) == run_decomposition());
  CHECK(test::error_code_of([] { parse_decomposition("none"); }) == Errc::NoJsonFound);
  CHECK(test::error_code_of([] { parse_decomposition(R"({"other": 1})"); }) == Errc::SchemaViolation);
  CHECK(test::error_code_of([] { parse_decomposition(R"([{"unit_id": "a", "part_name": ""}])"); }) ==
        Errc::SchemaViolation);
}

TEST_CASE("the run fixture lays out seven single-beat blocks in two slots") {
  const Timeline tl = run_timeline();
  CHECK(tl.tracks.size() == 7);
  CHECK(tl.blocks.size() == 7);
  for (std::size_t i = 0; i < tl.blocks.size(); ++i) {
    const Block& b = tl.blocks[i];
    CHECK(b.id == "b" + std::to_string(i + 1));
    CHECK(b.duration == 1.0);
    CHECK(b.start == (i < 4 ? 0.0 : 1.0));
  }
  CHECK(tl.blocks[0].label == "legs stride");
  CHECK(tl.tracks[0].color == "#f58231");
  CHECK(tl.tracks[4].unit_id == "hair_drag");
  CHECK(marker_times(tl) == std::vector<double>{1.0, 2.0});
  CHECK(timeline_violations(tl).empty());
  CHECK(unit_span(tl, "hair_drag")->start == 1.0);
  CHECK_FALSE(unit_span(tl, "nobody"));
}

TEST_CASE("global timeline order wins over temporal order") {
  InterpretationResult r;
  r.units = {bare_unit("a", 1), bare_unit("b", 2), bare_unit("c", std::nullopt)};
  const std::vector<DecompositionEntry> d{{"a", "p", "v", ""}, {"b", "p", "v", ""}, {"c", "p", "v", ""}};
  Timeline tl = build_timeline(r, d);
  CHECK(tl.blocks[0].start == 0.0);
  CHECK(tl.blocks[1].start == 1.0);
  CHECK(tl.blocks[2].start == 2.0);

  r.global_timeline = {"b", "a"};
  tl = build_timeline(r, d);
  CHECK(tl.blocks[1].start == 0.0);
  CHECK(tl.blocks[0].start == 1.0);
  CHECK(tl.blocks[2].start == 2.0);

  // Units sharing an order start together.
  r.global_timeline.clear();
  r.units[1].temporal_order = 1;
  tl = build_timeline(r, d);
  CHECK(tl.blocks[0].start == tl.blocks[1].start);
  CHECK(tl.blocks[2].start == 1.0);

  CHECK(test::error_code_of([&] { build_timeline(r, {{"zz", "p", "v", ""}}); }) == Errc::UnknownUnitInDecomposition);
}

TEST_CASE("an exclusive placeholder follows its block end") {
  const Timeline tl = run_timeline();
  const Timeline moved = move_block(tl, "b5", 3.0);  // b5..b7 share end 2, so k2 stays
  CHECK(marker_times(moved) == std::vector<double>{1.0, 2.0, 4.0});
  CHECK(timeline_violations(moved).empty());

  Timeline solo = delete_block(delete_block(tl, "b6"), "b7");
  const std::string k = solo.markers.back().id;
  solo = resize_block(solo, "b5", 2.5);
  CHECK(solo.markers.back().id == k);
  CHECK(solo.markers.back().time == 3.5);
  CHECK(timeline_violations(solo).empty());

  // Landing on an existing marker merges instead of duplicating.
  solo = move_block(solo, "b5", 0.0);
  CHECK(marker_times(solo) == std::vector<double>{1.0, 2.5});
  solo = resize_block(solo, "b5", 1.0);
  CHECK(marker_times(solo) == std::vector<double>{1.0});
  CHECK(timeline_violations(solo).empty());
}

TEST_CASE("generated markers are orphaned, never dropped") {
  Timeline tl = run_timeline();
  tl = delete_block(delete_block(tl, "b6"), "b7");
  const std::string k = tl.markers.back().id;
  tl = mark_generated(tl, k, "f1");
  tl = move_block(tl, "b5", 4.0);
  const KeyframeMarker* m = tl.find_marker(k);
  REQUIRE(m != nullptr);
  CHECK(m->orphaned);
  CHECK(m->frame_ref == "f1");
  CHECK(timeline_violations(tl).empty());
  CHECK(keyframe_schedule(tl).back().time == 5.0);

  // Coming back re-attaches the marker.
  tl = move_block(tl, "b5", 1.0);
  CHECK_FALSE(tl.find_marker(k)->orphaned);

  tl = delete_block(tl, "b5");
  CHECK(tl.find_marker(k)->orphaned);
  // Reopening skips orphans.
  const Timeline reopened = reopen_markers(tl);
  CHECK(reopened.find_marker(k)->status == MarkerStatus::generated);
  CHECK(test::error_code_of([&] { mark_generated(tl, "k99", "f0"); }) == Errc::InvalidArgument);
}

TEST_CASE("edit errors leave nothing half-done") {
  const Timeline tl = run_timeline();
  CHECK(test::error_code_of([&] { move_block(tl, "b99", 1); }) == Errc::UnknownBlock);
  CHECK(test::error_code_of([&] { move_block(tl, "b1", -0.5); }) == Errc::NegativeStart);
  CHECK(test::error_code_of([&] { resize_block(tl, "b1", 0); }) == Errc::NonPositiveDuration);
  CHECK(test::error_code_of([&] { resize_block(tl, "b1", NAN); }) == Errc::NonPositiveDuration);
  CHECK(test::error_code_of([&] { delete_block(tl, "b0"); }) == Errc::UnknownBlock);
  CHECK(test::error_code_of([&] { add_block(tl, "t42", "x", 0, 1); }) == Errc::UnknownTrack);
  CHECK(test::error_code_of([&] { add_block(tl, "t1", "x", 0, -1); }) == Errc::NonPositiveDuration);

  const Timeline added = add_block(tl, "t1", "legs kick", 2.0, 0.5, "extra");
  CHECK(added.blocks.back().id == "b8");
  CHECK(marker_times(added) == std::vector<double>{1.0, 2.0, 2.5});
  CHECK(add_block(delete_block(tl, "b3"), "t1", "x", 0, 1).blocks.back().id == "b8");
}

TEST_CASE("schedule covers placeholders with closed-interval activity") {
  Timeline tl = run_timeline();
  auto s = keyframe_schedule(tl);
  REQUIRE(s.size() == 2);
  CHECK(s[0].marker_id == "k1");
  // At t=1 body blocks end and hair blocks start; both count as active.
  CHECK(s[0].active_blocks == std::vector<std::string>{"b1", "b2", "b3", "b4", "b5", "b6", "b7"});
  CHECK(s[1].active_blocks == std::vector<std::string>{"b5", "b6", "b7"});
  tl = mark_generated(tl, "k1", "f0");
  s = keyframe_schedule(tl);
  REQUIRE(s.size() == 1);
  CHECK(s[0].marker_id == "k2");
  CHECK(keyframe_schedule(reopen_markers(tl)).size() == 2);
}

TEST_CASE("json round trip and violation detection") {
  Timeline tl = mark_generated(run_timeline(), "k2", "f1");
  tl.beat_duration_hint = 0.25;
  CHECK(timeline_from_json(to_json(tl)) == tl);
  CHECK(timeline_from_json(json::parse(to_json(tl).dump())) == tl);

  Timeline broken = tl;
  broken.blocks[0].track_id = "t99";
  broken.markers.pop_back();
  broken.blocks[1].duration = 0;
  const auto v = timeline_violations(broken);
  CHECK(v.size() >= 3);
}

// Random edit scripts: whatever the user does, every invariant holds, and no
// generated frame reference is ever lost.
TEST_CASE("1000-step random edit scripts keep the timeline consistent") {
  std::mt19937 rng(99);
  for (int script = 0; script < 20; ++script) {
    Timeline tl = run_timeline();
    std::map<std::string, std::string> generated;  // marker id -> frame ref
    int frame = 0;
    for (int step = 0; step < 1000; ++step) {
      const auto pick_block = [&]() -> std::string {
        if (tl.blocks.empty()) return "b0";
        return tl.blocks[std::uniform_int_distribution<std::size_t>(0, tl.blocks.size() - 1)(rng)].id;
      };
      const auto quarter = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng) / 4.0; };
      const int op = std::uniform_int_distribution<int>(0, 9)(rng);
      const auto before = tl;
      std::optional<Errc> err;
      try {
        if (op <= 2) {
          tl = move_block(tl, pick_block(), quarter(-1, 24));
        } else if (op <= 4) {
          tl = resize_block(tl, pick_block(), quarter(-1, 12));
        } else if (op == 5) {
          tl = delete_block(tl, pick_block());
        } else if (op <= 7) {
          const auto& t = tl.tracks[std::uniform_int_distribution<std::size_t>(0, tl.tracks.size() - 1)(rng)];
          tl = add_block(tl, t.id, "x", quarter(0, 24), quarter(1, 8));
        } else {
          auto sched = keyframe_schedule(tl);
          if (!sched.empty()) {
            const auto& e = sched[std::uniform_int_distribution<std::size_t>(0, sched.size() - 1)(rng)];
            const std::string f = "f" + std::to_string(frame++);
            tl = mark_generated(tl, e.marker_id, f);
            generated[e.marker_id] = f;
          }
        }
      } catch (const Error& e) {
        err = e.code();
      }
      if (err) {
        CHECK(tl == before);
        CHECK((*err == Errc::UnknownBlock || *err == Errc::NegativeStart || *err == Errc::NonPositiveDuration));
      }
      const auto v = timeline_violations(tl);
      if (!v.empty()) {
        CAPTURE(script);
        CAPTURE(step);
        CAPTURE(v.front());
        FAIL("invariant broken");
      }
      for (const auto& [id, f] : generated) {
        const KeyframeMarker* m = tl.find_marker(id);
        REQUIRE(m != nullptr);
        REQUIRE(m->frame_ref == f);
      }
      for (const auto& e : keyframe_schedule(tl)) {
        REQUIRE(tl.find_marker(e.marker_id)->status == MarkerStatus::placeholder);
        for (const auto& bid : e.active_blocks) {
          const Block* b = tl.find_block(bid);
          REQUIRE((b->start <= e.time && e.time <= b->end()));
        }
      }
    }
    CHECK(timeline_from_json(to_json(tl)) == tl);
  }
}
