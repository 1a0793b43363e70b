#include "notana/service.hpp"

#include <httplib.h>

#include <atomic>
#include <deque>
#include <map>
#include <mutex>
#include <sstream>
#include <stop_token>

#include "notana/demo.hpp"
#include "notana/digest.hpp"
#include "notana/generation.hpp"
#include "notana/prompt.hpp"
#include "notana/store.hpp"

namespace notana {

using nlohmann::json;

namespace {

constexpr int kMaxCanvasPx = 8192;

struct WorkspaceState {
  std::mutex mutex;  // serializes read-modify-write of one workspace
  std::atomic<bool> generating{false};
  std::atomic<std::uint64_t> infer_seq{0};
};

// Clears `flag` on scope exit unless released.
class BusyGuard {
 public:
  explicit BusyGuard(std::atomic<bool>& flag) : flag_(&flag) {}
  ~BusyGuard() {
    if (flag_ != nullptr) flag_->store(false);
  }
  BusyGuard(const BusyGuard&) = delete;
  BusyGuard& operator=(const BusyGuard&) = delete;
  std::atomic<bool>* release() { return std::exchange(flag_, nullptr); }

 private:
  std::atomic<bool>* flag_;
};

struct CachedResponse {
  std::string request_digest;
  bool in_flight = true;
  int status = 0;
  std::string content_type;
  std::string body;
};

// Per-request idempotency bookkeeping; `finish` stores the final response.
struct IdempotencySlot {
  std::string key;
  bool deferred = false;  // streamed responses finish from the stream's releaser
};

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) { send_json(res, http_status(e.code()), e.to_json()); }

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::InvalidArgument, "request body must be a JSON object");
  return j;
}

double require_number(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_number()) {
    throw Error(Errc::InvalidArgument, std::string("'") + key + "' must be a number", {{"field", key}});
  }
  return body[key].get<double>();
}

std::optional<std::string> optional_text(const json& body, const char* key) {
  if (!body.contains(key) || body[key].is_null()) return std::nullopt;
  if (!body[key].is_string()) throw Error(Errc::InvalidArgument, std::string("'") + key + "' must be a string");
  return body[key].get<std::string>();
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int parse_index(const std::string& text) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(Errc::InvalidArgument, "not an integer: '" + text + "'");
}

json frames_json(const std::vector<FrameRecord>& records) {
  json arr = json::array();
  for (const auto& r : records) arr.push_back(to_json(r));
  return arr;
}

std::string sse_event(std::string_view event, const json& data) {
  return "event: " + std::string(event) + "\ndata: " + data.dump() + "\n\n";
}

bool is_transparent(const Raster& r) {
  const auto bytes = r.bytes();
  for (std::size_t i = 3; i < bytes.size(); i += 4) {
    if (bytes[i] != 0) return false;
  }
  return true;
}

}  // namespace

int http_status(Errc code) {
  switch (code) {
    case Errc::NotFound:
    case Errc::UnknownUnit:
    case Errc::UnknownSlider:
    case Errc::UnknownBlock:
    case Errc::UnknownTrack:
      return 404;
    case Errc::Conflict:
    case Errc::LockHeld:
    case Errc::Superseded:
    case Errc::FrameNotReady:
    case Errc::ParentNotReady:
      return 409;
    case Errc::BackendUnavailable:
    case Errc::Timeout:
    case Errc::AuthMissing:
    case Errc::TransportError:
    case Errc::CassetteMiss:
    case Errc::GenerationRejected:
    case Errc::InterpretationInvalid:
      return 502;
    case Errc::StorageFull:
      return 507;
    case Errc::SerializationError:
    case Errc::IntegrityError:
    case Errc::Internal:
      return 500;
    default:
      return 400;
  }
}

ServiceBackends backends_from_config(const json& config) {
  ServiceBackends out;
  if (!config.is_object()) throw Error(Errc::InvalidArgument, "backend config must be a JSON object");
  if (config.contains("interpreter") && !config["interpreter"].is_null()) {
    const json& j = config["interpreter"];
    if (j.contains("mock")) {
      if (j.contains("replies")) {
        out.interpreter = std::make_shared<ScriptedInterpreter>(j["replies"].get<std::vector<std::string>>());
      } else {
        out.interpreter = demo_interpreter(j["mock"].get<std::string>());
      }
      out.interpreter_mode = "mock";
    } else {
      const BackendConfig cfg = BackendConfig::from_json(j, BackendKind::interpreter);
      out.interpreter = make_interpreter(cfg);
      out.interpreter_mode = std::string(to_string(cfg.mode));
    }
  }
  if (config.contains("image") && !config["image"].is_null()) {
    const json& j = config["image"];
    if (j.contains("mock")) {
      if (j["mock"] != "stamper") throw Error(Errc::InvalidArgument, "the only image mock is \"stamper\"");
      out.image = std::make_shared<DigestStamper>();
      out.image_mode = "mock";
    } else {
      const BackendConfig cfg = BackendConfig::from_json(j, BackendKind::image);
      out.image = make_image_backend(cfg);
      out.image_mode = std::string(to_string(cfg.mode));
    }
  }
  return out;
}

struct Service::Impl {
  ServiceOptions options;
  ServiceBackends backends;
  WorkspaceStore store;
  httplib::Server server;

  std::mutex states_mutex;
  std::map<std::string, std::shared_ptr<WorkspaceState>, std::less<>> states;

  std::mutex idem_mutex;
  std::map<std::string, CachedResponse> idem;
  std::deque<std::string> idem_order;

  Impl(ServiceOptions opts, ServiceBackends b)
      : options(std::move(opts)), backends(std::move(b)), store(options.data_dir) {}

  using Handler = std::function<void(const httplib::Request&, httplib::Response&, IdempotencySlot&)>;

  std::shared_ptr<WorkspaceState> state(const std::string& id) {
    std::lock_guard lock(states_mutex);
    auto& slot = states[id];
    if (!slot) slot = std::make_shared<WorkspaceState>();
    return slot;
  }

  // Loads a workspace, mapping malformed ids to NotFound.
  Workspace load(const std::string& id) {
    try {
      check_workspace_id(id);
    } catch (const Error&) {
      throw Error(Errc::NotFound, "no workspace '" + id + "'", {{"workspace_id", id}});
    }
    return store.get(id);
  }

  void save(Workspace& ws) {
    ws.modified_at = store.now();
    store.put(ws);
  }

  InterpreterBackend& interpreter() {
    if (!backends.interpreter) throw Error(Errc::BackendUnavailable, "no interpreter backend configured");
    return *backends.interpreter;
  }

  ImageBackend& image() {
    if (!backends.image) throw Error(Errc::BackendUnavailable, "no image backend configured");
    return *backends.image;
  }

  static void require_idle(const WorkspaceState& st) {
    if (st.generating.load()) throw Error(Errc::Conflict, "a generation run is in progress for this workspace");
  }

  static InterpretationResult& require_interpretation(Workspace& ws) {
    if (!ws.interpretation) throw Error(Errc::InvalidArgument, "workspace has no interpretation yet; run infer first");
    return *ws.interpretation;
  }

  static Timeline& require_timeline(Workspace& ws) {
    if (!ws.timeline) throw Error(Errc::InvalidArgument, "workspace has no timeline yet; run infer first");
    return *ws.timeline;
  }

  // --- idempotency ---

  void finish_idempotent(const std::string& key, int status, const std::string& content_type, const std::string& body) {
    std::lock_guard lock(idem_mutex);
    auto it = idem.find(key);
    if (it == idem.end()) return;
    if (status >= 500) {
      // Server and backend failures are retryable; forget the key.
      idem.erase(it);
      return;
    }
    it->second.in_flight = false;
    it->second.status = status;
    it->second.content_type = content_type;
    it->second.body = body;
  }

  httplib::Server::Handler wrap(Handler handler, bool mutating) {
    return [this, handler = std::move(handler), mutating](const httplib::Request& req, httplib::Response& res) {
      IdempotencySlot slot;
      const std::string header = mutating ? req.get_header_value("Idempotency-Key") : std::string();
      if (!header.empty()) {
        slot.key = req.method + " " + req.path + " " + header;
        const std::string digest = sha256_hex(req.body + "\n" + req.get_header_value("Content-Type"));
        std::lock_guard lock(idem_mutex);
        auto it = idem.find(slot.key);
        if (it != idem.end()) {
          if (it->second.request_digest != digest) {
            send_error(res, Error(Errc::InvalidArgument, "Idempotency-Key reused with a different request",
                                  {{"key", header}}));
          } else if (it->second.in_flight) {
            send_error(res, Error(Errc::Conflict, "a request with this Idempotency-Key is still running",
                                  {{"key", header}}));
          } else {
            res.status = it->second.status;
            res.set_content(it->second.body, it->second.content_type);
            res.set_header("Idempotent-Replay", "true");
          }
          return;
        }
        idem[slot.key].request_digest = digest;
        idem_order.push_back(slot.key);
        while (idem_order.size() > options.idempotency_cache) {
          const auto& oldest = idem_order.front();
          if (auto old = idem.find(oldest); old != idem.end() && !old->second.in_flight) idem.erase(old);
          idem_order.pop_front();
        }
      }
      try {
        handler(req, res, slot);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const json::exception& e) {
        // Request fields of the wrong JSON type.
        send_error(res, Error(Errc::InvalidArgument, e.what()));
      } catch (const std::exception& e) {
        send_error(res, Error(Errc::Internal, e.what()));
      }
      if (!slot.key.empty() && !slot.deferred) {
        finish_idempotent(slot.key, res.status, res.get_header_value("Content-Type"), res.body);
      }
    };
  }

  void get(const std::string& pattern, Handler h) { server.Get(pattern, wrap(std::move(h), false)); }
  void post(const std::string& pattern, Handler h) { server.Post(pattern, wrap(std::move(h), true)); }
  void put(const std::string& pattern, Handler h) { server.Put(pattern, wrap(std::move(h), true)); }
  void patch(const std::string& pattern, Handler h) { server.Patch(pattern, wrap(std::move(h), true)); }

  // --- inference ---

  json run_inference(const std::string& id, bool pinned) {
    auto st = state(id);
    require_idle(*st);
    const std::uint64_t seq = ++st->infer_seq;
    Workspace ws;
    {
      std::lock_guard lock(st->mutex);
      ws = load(id);
    }
    InterpreterBackend& backend = interpreter();
    InferenceOutcome outcome =
        pinned ? reinfer_with_edits(ws.drawing_layer, ws.notation_layer, require_interpretation(ws), backend,
                                    options.pipeline, id)
               : infer_motions(ws.drawing_layer, ws.notation_layer, backend, options.pipeline, id);
    const auto decomposition = decompose_units(outcome.job.composite_image, outcome.result, backend, options.pipeline);
    Timeline timeline = build_timeline(outcome.result, decomposition);

    std::lock_guard lock(st->mutex);
    if (st->infer_seq.load() != seq) {
      throw Error(Errc::Superseded, "a newer inference request replaced this one", {{"workspace_id", id}});
    }
    require_idle(*st);
    ws = load(id);
    ws.interpretation = outcome.result;
    ws.timeline = std::move(timeline);
    ws.frames.clear();
    save(ws);
    return to_json(outcome.result);
  }

  // --- generation ---

  struct GenerationPlan {
    Raster base;
    Timeline timeline;
    std::vector<FramePrompt> prompts;
  };

  GenerationPlan plan_generation(const std::string& id, const json& body) {
    auto st = state(id);
    std::lock_guard lock(st->mutex);
    Workspace ws = load(id);
    const InterpretationResult& result = require_interpretation(ws);
    GenerationPlan plan;
    plan.timeline = reopen_markers(require_timeline(ws));
    plan.prompts = synthesize_frame_prompts(result, plan.timeline, keyframe_schedule(plan.timeline));
    if (body.contains("max_frames")) {
      const auto n = body["max_frames"].get<long>();
      if (n <= 0) throw Error(Errc::InvalidArgument, "max_frames must be positive");
      if (static_cast<std::size_t>(n) < plan.prompts.size()) plan.prompts.resize(static_cast<std::size_t>(n));
    }
    if (plan.prompts.empty()) throw Error(Errc::InvalidArgument, "the timeline has no keyframe markers to generate");
    plan.base = generation_base(ws);
    if (options.polish_prompts) plan.prompts = polish_frame_prompts(plan.prompts, plan.base, interpreter());
    return plan;
  }

  json commit_generation(const std::string& id, Timeline timeline, const GenerationOutcome& outcome) {
    auto st = state(id);
    std::lock_guard lock(st->mutex);
    Workspace ws = load(id);
    for (const auto& r : outcome.records) {
      if (r.status == FrameStatus::done) timeline = mark_generated(timeline, r.marker_id, r.frame_id);
    }
    ws.timeline = std::move(timeline);
    ws.frames = outcome.records;
    save(ws);
    json out = {{"frames", frames_json(outcome.records)}};
    if (outcome.error) out["error"] = outcome.error->to_json();
    return out;
  }

  void handle_generate(const httplib::Request& req, httplib::Response& res, IdempotencySlot& slot) {
    const std::string id = req.matches[1];
    auto st = state(id);
    load(id);
    ImageBackend& backend = image();
    bool expected = false;
    if (!st->generating.compare_exchange_strong(expected, true)) {
      throw Error(Errc::Conflict, "a generation run is already in progress for this workspace", {{"workspace_id", id}});
    }
    BusyGuard busy(st->generating);
    GenerationPlan plan = plan_generation(id, parse_body(req));

    const bool stream = req.get_param_value("stream") != "0" &&
                        req.get_header_value("Accept").find("application/json") == std::string::npos;
    if (!stream) {
      const GenerationOutcome outcome = generate_frames(plan.base, plan.prompts, backend);
      send_json(res, 200, commit_generation(id, std::move(plan.timeline), outcome));
      return;
    }

    // The run happens inside the content provider so events reach the client
    // as frames finish; the busy flag is cleared by the releaser.
    auto transcript = std::make_shared<std::string>();
    auto shared_plan = std::make_shared<GenerationPlan>(std::move(plan));
    std::atomic<bool>* flag = busy.release();
    slot.deferred = !slot.key.empty();
    const std::string key = slot.key;
    res.status = 200;
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [this, id, shared_plan, transcript, &backend](std::size_t, httplib::DataSink& sink) {
          std::stop_source stop;
          auto emit = [&](std::string_view event, const json& data) {
            const std::string text = sse_event(event, data);
            *transcript += text;
            if (!stop.stop_requested() && !sink.write(text.data(), text.size())) stop.request_stop();
          };
          GenerationHooks hooks;
          hooks.stop = stop.get_token();
          hooks.on_update = [&](const std::vector<FrameRecord>& records) {
            emit("frames", {{"frames", frames_json(records)}});
          };
          json final_event;
          try {
            const GenerationOutcome outcome = generate_frames(shared_plan->base, shared_plan->prompts, backend, hooks);
            final_event = commit_generation(id, shared_plan->timeline, outcome);
          } catch (const Error& e) {
            final_event = {{"frames", json::array()}, {"error", e.to_json()}};
          } catch (const std::exception& e) {
            final_event = {{"frames", json::array()}, {"error", Error(Errc::Internal, e.what()).to_json()}};
          }
          emit("done", final_event);
          sink.done();
          return true;
        },
        [this, flag, key, transcript](bool) {
          flag->store(false);
          if (!key.empty()) finish_idempotent(key, 200, "text/event-stream", *transcript);
        });
  }

  void install_routes() {
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
      const Errc code = res.status == 404 ? Errc::NotFound : Errc::InvalidArgument;
      res.set_content(Error(code, "no such route").to_json().dump(), "application/json");
      return httplib::Server::HandlerResponse::Handled;
    });

    get("/health", [this](const httplib::Request&, httplib::Response& res, IdempotencySlot&) {
      const bool degraded = !backends.interpreter || !backends.image;
      send_json(res, 200,
                {{"status", "ok"},
                 {"degraded", degraded},
                 {"backends",
                  {{"interpreter", {{"configured", backends.interpreter != nullptr}, {"mode", backends.interpreter_mode}}},
                   {"image", {{"configured", backends.image != nullptr}, {"mode", backends.image_mode}}}}}});
    });

    post("/workspaces", [this](const httplib::Request& req, httplib::Response& res, IdempotencySlot&) {
      Workspace ws;
      if (req.get_header_value("Content-Type") == "image/png") {
        const std::span<const std::uint8_t> png(reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size());
        ws = store.create(decode_png(png));
      } else {
        const json body = parse_body(req);
        const int width = body.value("width", kDefaultCanvasPx);
        const int height = body.value("height", kDefaultCanvasPx);
        if (width < 1 || height < 1 || width > kMaxCanvasPx || height > kMaxCanvasPx) {
          throw Error(Errc::InvalidArgument, "canvas size out of range", {{"max", kMaxCanvasPx}});
        }
        ws = store.create(std::nullopt, width, height);
      }
      send_json(res, 201,
                {{"workspace_id", ws.id}, {"width", ws.drawing_layer.width()}, {"height", ws.drawing_layer.height()}});
    });

    get("/workspaces", [this](const httplib::Request&, httplib::Response& res, IdempotencySlot&) {
      send_json(res, 200, {{"workspaces", store.list()}});
    });

    get(R"(/workspaces/([^/]+))", [this](const httplib::Request& req, httplib::Response& res, IdempotencySlot&) {
      const std::string id = req.matches[1];
      json m = manifest_json(load(id));
      m["generating"] = state(id)->generating.load();
      send_json(res, 200, m);
    });

    put(R"(/workspaces/([^/]+)/layers/(drawing|notation))",
        [this](const httplib::Request& req, httplib::Response& res, IdempotencySlot&) {
          const std::string id = req.matches[1];
          const bool drawing = req.matches[2] == "drawing";
          const std::span<const std::uint8_t> png(reinterpret_cast<const std::uint8_t*>(req.body.data()),
                                                  req.body.size());
          Raster layer = decode_png(png);
          auto st = state(id);
          std::lock_guard lock(st->mutex);
          require_idle(*st);
          Workspace ws = load(id);
          Raster& target = drawing ? ws.drawing_layer : ws.notation_layer;
          Raster& other = drawing ? ws.notation_layer : ws.drawing_layer;
          if (!layer.same_size(target)) {
            // A blank companion layer follows the upload's size.
            if (!is_transparent(other) || ws.interpretation) {
              throw Error(Errc::DimensionMismatch, "layer size differs from the workspace canvas",
                          {{"expected", {target.width(), target.height()}}, {"got", {layer.width(), layer.height()}}});
            }
            other = Raster(layer.width(), layer.height());
          }
          target = std::move(layer);
          save(ws);
          res.status = 204;
        });

    get(R"(/workspaces/([^/]+)/layers/(drawing|notation))",
        [this](const httplib::Request& req, httplib::Response& res, IdempotencySlot&) {
          const Workspace ws = load(req.matches[1]);
          const auto png = encode_png(req.matches[2] == "drawing" ? ws.drawing_layer : ws.notation_layer);
          res.set_content(std::string(png.begin(), png.end()), "image/png");
        });

    post(R"(/workspaces/([^/]+)/infer)", [this](const httplib::Request& req, httplib::Response& res, IdempotencySlot&) {
      send_json(res, 200, run_inference(req.matches[1], false));
    });

    post(R"(/workspaces/([^/]+)/reinfer)",
         [this](const httplib::Request& req, httplib::Response& res, IdempotencySlot&) {
           send_json(res, 200, run_inference(req.matches[1], true));
         });

    post(R"(/workspaces/([^/]+)/units/([^/]+)/edits)",
         [this](const httplib::Request& req, httplib::Response& res, IdempotencySlot&) {
           const std::string id = req.matches[1];
           const json body = parse_body(req);
           UnitEdit edit{optional_text(body, "source"), optional_text(body, "path"), optional_text(body, "target"),
                         optional_text(body, "summary")};
           if (edit.empty()) throw Error(Errc::InvalidArgument, "edit names no field");
           auto st = state(id);
           std::lock_guard lock(st->mutex);
           require_idle(*st);
           Workspace ws = load(id);
           ws.interpretation = apply_unit_edit(require_interpretation(ws), req.matches[2].str(), edit);
           save(ws);
           send_json(res, 200, to_json(*ws.interpretation));
         });

    patch(R"(/workspaces/([^/]+)/units/([^/]+)/sliders/([^/]+))",
          [this](const httplib::Request& req, httplib::Response& res, IdempotencySlot&) {
            const std::string id = req.matches[1];
            const std::string unit_id = req.matches[2];
            const double value = require_number(parse_body(req), "value");
            auto st = state(id);
            std::lock_guard lock(st->mutex);
            require_idle(*st);
            Workspace ws = load(id);
            ws.interpretation = set_slider(require_interpretation(ws), unit_id, req.matches[3].str(), value);
            save(ws);
            send_json(res, 200, to_json(*ws.interpretation->find_unit(unit_id)));
          });

    get(R"(/workspaces/([^/]+)/timeline)", [this](const httplib::Request& req, httplib::Response& res, IdempotencySlot&) {
      Workspace ws = load(req.matches[1]);
      send_json(res, 200, to_json(require_timeline(ws)));
    });

    post(R"(/workspaces/([^/]+)/timeline/blocks/([^:/]+):(move|resize|delete))",
         [this](const httplib::Request& req, httplib::Response& res, IdempotencySlot&) {
           const std::string id = req.matches[1];
           const std::string block_id = req.matches[2];
           const std::string op = req.matches[3];
           const json body = parse_body(req);
           auto st = state(id);
           std::lock_guard lock(st->mutex);
           require_idle(*st);
           Workspace ws = load(id);
           Timeline& tl = require_timeline(ws);
           if (op == "move") {
             tl = move_block(tl, block_id, require_number(body, "start"));
           } else if (op == "resize") {
             tl = resize_block(tl, block_id, require_number(body, "duration"));
           } else {
             tl = delete_block(tl, block_id);
           }
           save(ws);
           send_json(res, 200, to_json(tl));
         });

    post(R"(/workspaces/([^/]+)/timeline/blocks)",
         [this](const httplib::Request& req, httplib::Response& res, IdempotencySlot&) {
           const std::string id = req.matches[1];
           const json body = parse_body(req);
           const auto track_id = optional_text(body, "track_id");
           const auto label = optional_text(body, "label");
           if (!track_id || !label) throw Error(Errc::InvalidArgument, "track_id and label are required");
           auto st = state(id);
           std::lock_guard lock(st->mutex);
           require_idle(*st);
           Workspace ws = load(id);
           Timeline& tl = require_timeline(ws);
           tl = add_block(tl, *track_id, *label, require_number(body, "start"), require_number(body, "duration"),
                          optional_text(body, "description").value_or(""));
           save(ws);
           send_json(res, 201, to_json(tl));
         });

    post(R"(/workspaces/([^/]+)/generate)",
         [this](const httplib::Request& req, httplib::Response& res, IdempotencySlot& slot) {
           handle_generate(req, res, slot);
         });

    post(R"(/workspaces/([^/]+)/frames/(\d+)/regenerate)",
         [this](const httplib::Request& req, httplib::Response& res, IdempotencySlot&) {
           const std::string id = req.matches[1];
           const int index = parse_index(req.matches[2]);
           auto st = state(id);
           ImageBackend& backend = image();
           bool expected = false;
           if (!st->generating.compare_exchange_strong(expected, true)) {
             throw Error(Errc::Conflict, "a generation run is in progress for this workspace");
           }
           BusyGuard busy(st->generating);
           Workspace ws;
           {
             std::lock_guard lock(st->mutex);
             ws = load(id);
           }
           std::vector<FrameRecord> records = regenerate_frame(generation_base(ws), ws.frames, index, backend);
           std::lock_guard lock(st->mutex);
           ws = load(id);
           ws.frames = std::move(records);
           save(ws);
           send_json(res, 200, {{"frames", frames_json(ws.frames)}});
         });

    get(R"(/workspaces/([^/]+)/frames)", [this](const httplib::Request& req, httplib::Response& res, IdempotencySlot&) {
      send_json(res, 200, {{"frames", frames_json(load(req.matches[1]).frames)}});
    });

    get(R"(/workspaces/([^/]+)/frames/(\d+))",
        [this](const httplib::Request& req, httplib::Response& res, IdempotencySlot&) {
          const Workspace ws = load(req.matches[1]);
          const int index = parse_index(req.matches[2]);
          if (index < 0 || static_cast<std::size_t>(index) >= ws.frames.size()) {
            throw Error(Errc::NotFound, "no frame " + std::to_string(index), {{"index", index}});
          }
          const FrameRecord& r = ws.frames[static_cast<std::size_t>(index)];
          if (r.status != FrameStatus::done || !r.image) {
            throw Error(Errc::FrameNotReady, "frame " + r.frame_id + " is " + std::string(to_string(r.status)),
                        {{"index", index}});
          }
          const auto png = encode_png(*r.image);
          res.set_content(std::string(png.begin(), png.end()), "image/png");
        });

    get(R"(/workspaces/([^/]+)/onion)", [this](const httplib::Request& req, httplib::Response& res, IdempotencySlot&) {
      const Workspace ws = load(req.matches[1]);
      std::vector<int> selected;
      for (const auto& item : split_csv(req.get_param_value("frames"))) selected.push_back(parse_index(item));
      std::optional<std::vector<double>> ramp;
      if (req.has_param("ramp")) {
        ramp.emplace();
        for (const auto& item : split_csv(req.get_param_value("ramp"))) {
          try {
            ramp->push_back(std::stod(item));
          } catch (const std::exception&) {
            throw Error(Errc::InvalidArgument, "bad ramp value '" + item + "'");
          }
        }
      }
      const auto png = encode_png(onion_skin(ws.drawing_layer, ws.frames, selected, ramp));
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    });

    post(R"(/workspaces/([^/]+)/save)", [this](const httplib::Request& req, httplib::Response& res, IdempotencySlot&) {
      const std::string id = req.matches[1];
      auto st = state(id);
      std::lock_guard lock(st->mutex);
      const SnapshotMeta meta = store.save(load(id));
      send_json(res, 201, to_json(meta));
    });

    get(R"(/workspaces/([^/]+)/history)",
        [this](const httplib::Request& req, httplib::Response& res, IdempotencySlot&) {
          const std::string id = req.matches[1];
          load(id);
          json list = json::array();
          for (const auto& m : store.list_history(id)) list.push_back(to_json(m));
          send_json(res, 200, {{"snapshots", list}});
        });

    post(R"(/workspaces/([^/]+)/restore)",
         [this](const httplib::Request& req, httplib::Response& res, IdempotencySlot&) {
           const std::string id = req.matches[1];
           const auto snapshot_id = optional_text(parse_body(req), "snapshot_id");
           if (!snapshot_id) throw Error(Errc::InvalidArgument, "snapshot_id is required");
           auto st = state(id);
           std::lock_guard lock(st->mutex);
           require_idle(*st);
           load(id);
           Workspace ws = store.load(*snapshot_id);
           if (ws.id != id) {
             throw Error(Errc::InvalidArgument, "snapshot belongs to another workspace", {{"workspace_id", ws.id}});
           }
           save(ws);
           send_json(res, 200, manifest_json(ws));
         });
  }
};

Service::Service(ServiceOptions options, ServiceBackends backends)
    : impl_(std::make_unique<Impl>(std::move(options), std::move(backends))) {
  impl_->install_routes();
}

Service::~Service() { stop(); }

httplib::Server& Service::server() { return impl_->server; }

int Service::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(Errc::Internal, "cannot bind to " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(Errc::Internal, "cannot bind to " + host + ":" + std::to_string(port));
  }
  return port;
}

void Service::run() { impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace notana
