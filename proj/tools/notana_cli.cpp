// notana: headless front end for the authoring engine.
//
//   notana serve    --port 8787 --data-dir ./notana-data [--backend-config cfg.json]
//   notana infer    --drawing d.png [--notations n.png] --out result.json --backend mock|replay|live
//   notana generate --workspace-dir <store>/<id> [--frames N] --backend mock|replay|live
//   notana demo     --example run|cubes|splash [--out dir]
//
// Failures print an ApiError object on stderr and exit 1.

#include <CLI11.hpp>
#include <fmt/core.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <iterator>
#include <pthread.h>
#include <thread>

#include "notana/backend.hpp"
#include "notana/demo.hpp"
#include "notana/error.hpp"
#include "notana/generation.hpp"
#include "notana/pipeline.hpp"
#include "notana/prompt.hpp"
#include "notana/service.hpp"
#include "notana/store.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace notana;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::NotFound, "cannot read " + path.string(), {{"path", path.string()}});
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(Errc::StorageFull, "cannot write " + path.string(), {{"path", path.string()}});
}

Raster read_png_file(const fs::path& path) {
  const std::string bytes = read_text(path);
  return decode_png({reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
}

// Backend selection shared by infer and generate.
struct BackendFlags {
  std::string mode = "mock";
  std::string cassette = "cassettes";
  std::string config_file;
  std::string example = "run";  // scripted replies for the mock interpreter
};

void add_backend_flags(CLI::App* cmd, BackendFlags& flags) {
  cmd->add_option("--backend", flags.mode, "mock, replay or live")
      ->check(CLI::IsMember({"mock", "replay", "live"}))
      ->capture_default_str();
  cmd->add_option("--cassette", flags.cassette, "cassette directory for replay")->capture_default_str();
  cmd->add_option("--backend-config", flags.config_file, "JSON backend config overriding the defaults");
}

BackendConfig live_config(const BackendFlags& flags, BackendKind kind) {
  json j = json::object();
  if (!flags.config_file.empty()) {
    const json file = json::parse(read_text(flags.config_file));
    const char* key = kind == BackendKind::interpreter ? "interpreter" : "image";
    if (file.contains(key)) j = file[key];
  }
  j["mode"] = flags.mode;
  if (flags.mode == "replay" && !j.contains("cassette")) j["cassette"] = flags.cassette;
  return BackendConfig::from_json(j, kind);
}

std::unique_ptr<InterpreterBackend> interpreter_for(const BackendFlags& flags) {
  if (flags.mode == "mock") return demo_interpreter(flags.example);
  return make_interpreter(live_config(flags, BackendKind::interpreter));
}

std::unique_ptr<ImageBackend> image_backend_for(const BackendFlags& flags) {
  if (flags.mode == "mock") return std::make_unique<DigestStamper>();
  return make_image_backend(live_config(flags, BackendKind::image));
}

int cmd_serve(int port, const std::string& host, const std::string& data_dir, const std::string& config_file,
              bool polish) {
  ServiceOptions options;
  options.data_dir = data_dir;
  options.polish_prompts = polish;
  ServiceBackends backends;
  if (!config_file.empty()) backends = backends_from_config(json::parse(read_text(config_file)));

  // Block the termination signals before any thread starts so only the
  // waiter below receives them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(options, std::move(backends));
  const int bound = service.bind(host, port);
  fmt::print("listening on http://{}:{}\n", host, bound);
  std::fflush(stdout);

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  service.run();
  // run() can also return on a bind failure; wake the waiter either way.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

int cmd_infer(const std::string& drawing_path, const std::string& notations_path, const std::string& out,
              const BackendFlags& flags) {
  const Raster drawing = read_png_file(drawing_path);
  const Raster notations = notations_path.empty() ? Raster(drawing.width(), drawing.height())
                                                  : read_png_file(notations_path);
  auto interpreter = interpreter_for(flags);
  const InferenceOutcome outcome = infer_motions(drawing, notations, *interpreter);
  write_text(out, serialize(outcome.result));
  fmt::print("{} units -> {}\n", outcome.result.units.size(), out);
  return 0;
}

int cmd_generate(const std::string& workspace_dir, int max_frames, const BackendFlags& flags) {
  const fs::path dir = fs::absolute(workspace_dir).lexically_normal();
  const fs::path leaf = dir.has_filename() ? dir : dir.parent_path();
  WorkspaceStore store(leaf.parent_path());
  const std::string id = leaf.filename().string();
  Workspace ws = store.get(id);
  if (!ws.interpretation || !ws.timeline) {
    throw Error(Errc::InvalidArgument, "workspace has no interpretation or timeline; run infer first",
                {{"workspace_id", id}});
  }
  Timeline timeline = reopen_markers(*ws.timeline);
  auto prompts = synthesize_frame_prompts(*ws.interpretation, timeline, keyframe_schedule(timeline));
  if (max_frames > 0 && static_cast<std::size_t>(max_frames) < prompts.size()) prompts.resize(max_frames);

  auto backend = image_backend_for(flags);
  GenerationHooks hooks;
  hooks.on_update = [](const std::vector<FrameRecord>& records) {
    for (const auto& r : records) {
      if (r.status == FrameStatus::generating) {
        fmt::print("generating {} ({}/{})\n", r.frame_id, r.index + 1, records.size());
      }
    }
  };
  const GenerationOutcome outcome = generate_frames(generation_base(ws), prompts, *backend, hooks);
  for (const auto& r : outcome.records) {
    if (r.status == FrameStatus::done) timeline = mark_generated(timeline, r.marker_id, r.frame_id);
  }
  ws.timeline = std::move(timeline);
  ws.frames = outcome.records;
  ws.modified_at = store.now();
  store.put(ws);
  if (outcome.error) throw *outcome.error;
  fmt::print("{} frames -> {}\n", outcome.records.size(), (leaf / "frames").string());
  return 0;
}

int cmd_demo(const std::string& example, std::string out) {
  if (out.empty()) out = "demo-" + example;
  const DemoReport report = run_demo(example);
  write_demo(report, out);
  fmt::print("{}: {} units, {} frames -> {}\n", example, report.workspace.interpretation->units.size(),
             report.workspace.frames.size(), out);
  return 0;
}

void print_error(const Error& e) { std::cerr << e.to_json().dump() << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"notana: sketch-and-notation animation authoring engine"};
  app.require_subcommand(1);

  auto* serve = app.add_subcommand("serve", "run the local HTTP service");
  int port = 8787;
  std::string host = "127.0.0.1";
  std::string data_dir = "notana-data";
  std::string serve_config;
  bool polish = false;
  serve->add_option("--port", port, "0 picks a free port")->capture_default_str();
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--data-dir", data_dir)->capture_default_str();
  serve->add_option("--backend-config", serve_config, "JSON backend config");
  serve->add_flag("--polish", polish, "rewrite frame prompts through the interpreter");

  auto* infer = app.add_subcommand("infer", "interpret a drawing and its notations");
  std::string drawing, notations, out_json = "result.json";
  BackendFlags infer_flags;
  infer->add_option("--drawing", drawing)->required();
  infer->add_option("--notations", notations);
  infer->add_option("--out", out_json)->capture_default_str();
  infer->add_option("--example", infer_flags.example, "scripted replies used by the mock backend")
      ->capture_default_str();
  add_backend_flags(infer, infer_flags);

  auto* generate = app.add_subcommand("generate", "generate keyframes for a stored workspace");
  std::string workspace_dir;
  int frames = 0;
  BackendFlags generate_flags;
  generate->add_option("--workspace-dir", workspace_dir)->required();
  generate->add_option("--frames", frames, "stop after N frames (0 = all)");
  add_backend_flags(generate, generate_flags);

  auto* demo = app.add_subcommand("demo", "run a built-in example end to end with mock backends");
  std::string example, demo_out;
  demo->add_option("--example", example)->required()->check(CLI::IsMember(demo_examples()));
  demo->add_option("--out", demo_out, "output directory (default demo-<example>)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error(Error(Errc::InvalidArgument, e.what()));
    return 2;
  }

  try {
    if (*serve) return cmd_serve(port, host, data_dir, serve_config, polish);
    if (*infer) return cmd_infer(drawing, notations, out_json, infer_flags);
    if (*generate) return cmd_generate(workspace_dir, frames, generate_flags);
    if (*demo) return cmd_demo(example, demo_out);
  } catch (const Error& e) {
    print_error(e);
    return 1;
  } catch (const json::exception& e) {
    print_error(Error(Errc::SerializationError, e.what()));
    return 1;
  } catch (const std::exception& e) {
    print_error(Error(Errc::Internal, e.what()));
    return 1;
  }
  return 0;
}
