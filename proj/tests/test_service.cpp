#include <doctest.h>

#include <future>

#include "service_harness.hpp"

using namespace notana;
using nlohmann::json;
using test::body_json;

namespace {

std::string png_text(const Raster& r) {
  const auto png = encode_png(r);
  return {png.begin(), png.end()};
}

Raster png_body(const httplib::Result& r) {
  return decode_png(std::span(reinterpret_cast<const std::uint8_t*>(r->body.data()), r->body.size()));
}

// Splits an SSE transcript into (event, data) pairs.
std::vector<std::pair<std::string, json>> sse_events(const std::string& text) {
  std::vector<std::pair<std::string, json>> out;
  std::size_t pos = 0;
  while (true) {
    const auto end = text.find("\n\n", pos);
    if (end == std::string::npos) break;
    const std::string chunk = text.substr(pos, end - pos);
    pos = end + 2;
    const auto nl = chunk.find('\n');
    REQUIRE(chunk.rfind("event: ", 0) == 0);
    REQUIRE(chunk.compare(nl + 1, 6, "data: ") == 0);
    out.emplace_back(chunk.substr(7, nl - 7), json::parse(chunk.substr(nl + 7)));
  }
  return out;
}

}  // namespace

TEST_CASE("status mapping") {
  CHECK(http_status(Errc::NotFound) == 404);
  CHECK(http_status(Errc::UnknownSlider) == 404);
  CHECK(http_status(Errc::Conflict) == 409);
  CHECK(http_status(Errc::Superseded) == 409);
  CHECK(http_status(Errc::CassetteMiss) == 502);
  CHECK(http_status(Errc::InterpretationInvalid) == 502);
  CHECK(http_status(Errc::StorageFull) == 507);
  CHECK(http_status(Errc::IntegrityError) == 500);
  CHECK(http_status(Errc::SchemaViolation) == 400);
  CHECK(http_status(Errc::EmptyTriplet) == 400);
}

TEST_CASE("backend config documents") {
  const ServiceBackends mocks = test::mock_backends();
  CHECK(mocks.interpreter_mode == "mock");
  CHECK(mocks.image_mode == "mock");
  const ServiceBackends none = backends_from_config(json::object());
  CHECK_FALSE(none.interpreter);
  CHECK(test::error_code_of([] { backends_from_config({{"image", {{"mock", "other"}}}}); }) == Errc::InvalidArgument);
  CHECK(test::error_code_of([] { backends_from_config(json::array()); }) == Errc::InvalidArgument);
  CHECK(test::error_code_of([] { backends_from_config({{"interpreter", {{"mode", "replay"}}}}); }) ==
        Errc::InvalidArgument);
  const ServiceBackends replay =
      backends_from_config({{"interpreter", {{"mode", "replay"}, {"cassette", "/nonexistent"}}}});
  CHECK(replay.interpreter_mode == "replay");
}

TEST_CASE("health reports degraded mode without backends") {
  test::ServiceHarness h(ServiceBackends{});
  auto c = h.client();
  auto health = c.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(body_json(health)["degraded"] == true);
  CHECK(body_json(health)["backends"]["interpreter"]["configured"] == false);

  auto created = c.Post("/workspaces", json{{"width", 60}, {"height", 40}}.dump(), "application/json");
  REQUIRE(created->status == 201);
  const std::string id = body_json(created)["workspace_id"];
  auto infer = c.Post("/workspaces/" + id + "/infer", "", "application/json");
  CHECK(infer->status == 502);
  CHECK(body_json(infer)["code"] == "BackendUnavailable");
  auto gen = c.Post("/workspaces/" + id + "/generate?stream=0", "", "application/json");
  CHECK(gen->status == 502);
}

TEST_CASE("full authoring flow over HTTP") {
  test::ServiceHarness h(test::mock_backends());
  auto c = h.client();
  CHECK(body_json(c.Get("/health"))["degraded"] == false);
  const std::string id = h.create_from_demo();
  const std::string ws = "/workspaces/" + id;
  CHECK(body_json(c.Get("/workspaces"))["workspaces"] == json::array({id}));

  auto manifest = c.Get(ws);
  REQUIRE(manifest->status == 200);
  CHECK(body_json(manifest)["width"] == 300);
  CHECK(body_json(manifest)["generating"] == false);
  CHECK(body_json(manifest)["interpretation"].is_null());
  CHECK(png_body(c.Get(ws + "/layers/notation")) == run_demo("run").workspace.notation_layer);

  // Timeline before inference is a client error.
  CHECK(c.Get(ws + "/timeline")->status == 400);

  auto infer = c.Post(ws + "/infer", "", "application/json");
  REQUIRE(infer->status == 200);
  const json result = body_json(infer);
  REQUIRE(result["units"].size() == 2);
  CHECK(result["units"][0]["id"] == "body_run");

  auto timeline = c.Get(ws + "/timeline");
  REQUIRE(timeline->status == 200);
  CHECK(body_json(timeline)["blocks"].size() == 7);

  auto slider = c.Patch(ws + "/units/body_run/sliders/stride", json{{"value", 5}}.dump(), "application/json");
  REQUIRE(slider->status == 200);
  CHECK(body_json(slider)["sliders"][0]["value"] == 2.0);
  auto bad_slider = c.Patch(ws + "/units/body_run/sliders/nope", json{{"value", 1}}.dump(), "application/json");
  CHECK(bad_slider->status == 404);
  CHECK(body_json(bad_slider)["code"] == "UnknownSlider");
  CHECK(c.Patch(ws + "/units/body_run/sliders/stride", json{{"value", "x"}}.dump(), "application/json")->status ==
        400);

  auto edit = c.Post(ws + "/units/hair_drag/edits", json{{"target", "hair flat behind"}}.dump(), "application/json");
  REQUIRE(edit->status == 200);
  auto empty_triplet = c.Post(ws + "/units/hair_drag/edits",
                              json{{"source", ""}, {"path", ""}, {"target", ""}}.dump(), "application/json");
  CHECK(empty_triplet->status == 400);
  CHECK(body_json(empty_triplet)["code"] == "EmptyTriplet");

  auto reinfer = c.Post(ws + "/reinfer", "", "application/json");
  REQUIRE(reinfer->status == 200);
  const json pinned = body_json(reinfer)["units"][1];
  CHECK(pinned["primary"]["target"] == "hair flat behind");
  CHECK(pinned["pin_enforced"] == true);

  // Timeline edits.
  auto moved = c.Post(ws + "/timeline/blocks/b5:move", json{{"start", 2.0}}.dump(), "application/json");
  REQUIRE(moved->status == 200);
  CHECK(body_json(moved)["markers"].size() == 3);
  CHECK(c.Post(ws + "/timeline/blocks/b99:delete", "", "application/json")->status == 404);
  CHECK(c.Post(ws + "/timeline/blocks/b1:resize", json{{"duration", -1}}.dump(), "application/json")->status == 400);
  auto added = c.Post(ws + "/timeline/blocks",
                      json{{"track_id", "t1"}, {"label", "legs kick"}, {"start", 0.0}, {"duration", 0.5}}.dump(),
                      "application/json");
  CHECK(added->status == 201);
  CHECK(body_json(added)["blocks"].size() == 8);
  const std::size_t markers = body_json(added)["markers"].size();

  // Generation, JSON mode.
  httplib::Headers accept_json{{"Accept", "application/json"}};
  auto gen = c.Post(ws + "/generate", accept_json, "", "application/json");
  REQUIRE(gen->status == 200);
  const json frames = body_json(gen)["frames"];
  REQUIRE(frames.size() == markers);
  CHECK_FALSE(body_json(gen).contains("error"));
  for (const auto& f : frames) CHECK(f["status"] == "done");

  const Raster f0 = png_body(c.Get(ws + "/frames/0"));
  CHECK(read_stamps(f0).size() == 1);
  const Raster last = png_body(c.Get(ws + "/frames/" + std::to_string(markers - 1)));
  CHECK(read_stamps(last).size() == markers);
  CHECK(c.Get(ws + "/frames/99")->status == 404);

  auto onion = c.Get(ws + "/onion?frames=0,1&ramp=0.5,1");
  REQUIRE(onion->status == 200);
  CHECK(png_body(onion).width() == 300);
  CHECK(c.Get(ws + "/onion?frames=0,1&ramp=0.5")->status == 400);

  auto regen = c.Post(ws + "/frames/1/regenerate", "", "application/json");
  REQUIRE(regen->status == 200);
  CHECK(body_json(regen)["frames"][1]["status"] == "done");
  if (markers > 2) {
    CHECK(body_json(regen)["frames"][2]["status"] == "pending");
    auto not_ready = c.Get(ws + "/frames/2");
    CHECK(not_ready->status == 409);
    CHECK(body_json(not_ready)["code"] == "FrameNotReady");
  }

  // Snapshots.
  auto saved = c.Post(ws + "/save", "", "application/json");
  REQUIRE(saved->status == 201);
  const std::string snap = body_json(saved)["snapshot_id"];
  c.Patch(ws + "/units/body_run/sliders/stride", json{{"value", 0.25}}.dump(), "application/json");
  CHECK(body_json(c.Get(ws + "/history"))["snapshots"].size() == 1);
  auto restored = c.Post(ws + "/restore", json{{"snapshot_id", snap}}.dump(), "application/json");
  REQUIRE(restored->status == 200);
  CHECK(body_json(restored)["interpretation"]["units"][0]["sliders"][0]["value"] == 2.0);
  CHECK(c.Post(ws + "/restore", json{{"snapshot_id", id + "~000042"}}.dump(), "application/json")->status == 404);
}

TEST_CASE("server-sent events stream frame progress") {
  test::ServiceHarness h(test::mock_backends());
  auto c = h.client();
  const std::string id = h.create_from_demo();
  REQUIRE(c.Post("/workspaces/" + id + "/infer", "", "application/json")->status == 200);
  auto gen = c.Post("/workspaces/" + id + "/generate", "", "application/json");
  REQUIRE(gen->status == 200);
  CHECK(gen->get_header_value("Content-Type") == "text/event-stream");
  const auto events = sse_events(gen->body);
  REQUIRE(events.size() >= 3);
  CHECK(events.front().first == "frames");
  CHECK(events.back().first == "done");
  for (std::size_t i = 0; i + 1 < events.size(); ++i) CHECK(events[i].first == "frames");
  const json done = events.back().second;
  REQUIRE(done["frames"].size() == 2);
  CHECK(done["frames"][1]["status"] == "done");
  CHECK_FALSE(done.contains("error"));
  // The run was committed.
  CHECK(body_json(c.Get("/workspaces/" + id + "/frames"))["frames"] == done["frames"]);
  CHECK(body_json(c.Get("/workspaces/" + id))["generating"] == false);
}

TEST_CASE("a second generate while one runs is rejected") {
  auto gate = std::make_shared<test::Gate>();
  ServiceBackends b = test::mock_backends();
  b.image = std::make_shared<test::GatedImageBackend>(gate);
  test::ServiceHarness h(std::move(b));
  const std::string id = h.create_from_demo();
  const std::string ws = "/workspaces/" + id;
  auto c = h.client();
  REQUIRE(c.Post(ws + "/infer", "", "application/json")->status == 200);

  auto first = std::async(std::launch::async, [&] {
    auto c1 = h.client();
    return c1.Post(ws + "/generate?stream=0", "", "application/json");
  });
  REQUIRE(gate->wait_entered());
  auto second = c.Post(ws + "/generate?stream=0", "", "application/json");
  CHECK(second->status == 409);
  CHECK(body_json(second)["code"] == "Conflict");
  CHECK(c.Patch(ws + "/units/body_run/sliders/stride", json{{"value", 1.5}}.dump(), "application/json")->status ==
        409);
  CHECK(c.Post(ws + "/frames/0/regenerate", "", "application/json")->status == 409);
  CHECK(body_json(c.Get(ws))["generating"] == true);
  gate->release();
  auto done = first.get();
  REQUIRE(done);
  CHECK(done->status == 200);
  CHECK(body_json(c.Get(ws))["generating"] == false);
  CHECK(c.Post(ws + "/generate?stream=0", "", "application/json")->status == 200);
}

TEST_CASE("a newer inference supersedes a slower one") {
  auto gate = std::make_shared<test::Gate>();
  ServiceBackends b = test::mock_backends();
  b.interpreter = std::make_shared<test::GatedInterpreter>(gate, demo_interpreter("run"));
  test::ServiceHarness h(std::move(b));
  const std::string id = h.create_from_demo();
  auto slow = std::async(std::launch::async, [&] {
    auto c1 = h.client();
    return c1.Post("/workspaces/" + id + "/infer", "", "application/json");
  });
  REQUIRE(gate->wait_entered());
  auto c = h.client();
  auto fast = c.Post("/workspaces/" + id + "/infer", "", "application/json");
  CHECK(fast->status == 200);
  gate->release();
  auto stale = slow.get();
  CHECK(stale->status == 409);
  CHECK(body_json(stale)["code"] == "Superseded");
}

TEST_CASE("idempotency keys replay the first response") {
  test::ServiceHarness h(test::mock_backends());
  auto c = h.client();
  const httplib::Headers key{{"Idempotency-Key", "abc"}};
  const std::string body = json{{"width", 32}, {"height", 32}}.dump();
  auto a = c.Post("/workspaces", key, body, "application/json");
  auto b = c.Post("/workspaces", key, body, "application/json");
  REQUIRE(a->status == 201);
  CHECK(b->status == 201);
  CHECK(a->body == b->body);
  CHECK(b->get_header_value("Idempotent-Replay") == "true");
  CHECK(body_json(c.Get("/workspaces"))["workspaces"].size() == 1);

  auto mismatch = c.Post("/workspaces", key, json{{"width", 33}}.dump(), "application/json");
  CHECK(mismatch->status == 400);
  // Without a key every call acts.
  c.Post("/workspaces", body, "application/json");
  CHECK(body_json(c.Get("/workspaces"))["workspaces"].size() == 2);
  // Failed backend calls are not cached.
  test::ServiceHarness bare(ServiceBackends{});
  auto bc = bare.client();
  const std::string id = body_json(bc.Post("/workspaces", body, "application/json"))["workspace_id"];
  CHECK(bc.Post("/workspaces/" + id + "/infer", key, "", "application/json")->status == 502);
  CHECK(bc.Post("/workspaces/" + id + "/infer", key, "", "application/json")->get_header_value("Idempotent-Replay") ==
        "");
}

TEST_CASE("malformed requests map to client errors") {
  test::ServiceHarness h(test::mock_backends());
  auto c = h.client();
  auto route = c.Get("/nope");
  CHECK(route->status == 404);
  CHECK(body_json(route)["code"] == "NotFound");
  CHECK(c.Get("/workspaces/w424242")->status == 404);
  CHECK(c.Get("/workspaces/..%2Fetc")->status == 404);
  auto bad_json = c.Post("/workspaces", "{nope", "application/json");
  CHECK(bad_json->status == 400);
  CHECK(body_json(bad_json)["code"] == "InvalidArgument");
  CHECK(c.Post("/workspaces", json{{"width", "wide"}}.dump(), "application/json")->status == 400);
  CHECK(c.Post("/workspaces", json{{"width", 0}}.dump(), "application/json")->status == 400);
  auto bad_png = c.Post("/workspaces", "not a png", "image/png");
  CHECK(bad_png->status == 400);
  CHECK(body_json(bad_png)["code"] == "PngError");

  const std::string id = body_json(c.Post("/workspaces", json{{"width", 20}, {"height", 20}}.dump(),
                                          "application/json"))["workspace_id"];
  // A blank companion layer follows the first upload's size.
  CHECK(c.Put("/workspaces/" + id + "/layers/drawing", png_text(Raster(30, 10, {9, 9, 9, 255})), "image/png")->status ==
        204);
  auto mismatch = c.Put("/workspaces/" + id + "/layers/drawing", png_text(Raster(8, 8)), "image/png");
  CHECK(mismatch->status == 204);
  CHECK(c.Put("/workspaces/" + id + "/layers/notation", png_text(Raster(8, 8, {1, 1, 1, 255})), "image/png")->status ==
        204);
  auto wrong = c.Put("/workspaces/" + id + "/layers/drawing", png_text(Raster(9, 9)), "image/png");
  CHECK(wrong->status == 400);
  CHECK(body_json(wrong)["code"] == "DimensionMismatch");
  CHECK(c.Post("/workspaces/" + id + "/reinfer", "", "application/json")->status == 400);
}
