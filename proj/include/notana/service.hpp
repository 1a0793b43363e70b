#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "notana/backend.hpp"
#include "notana/error.hpp"
#include "notana/pipeline.hpp"

namespace httplib {
class Server;
}

// Local HTTP companion service: JSON over HTTP, PNG for rasters, server-sent
// events for generation progress.
namespace notana {

struct ServiceBackends {
  std::shared_ptr<InterpreterBackend> interpreter;  // null: not configured
  std::shared_ptr<ImageBackend> image;
  std::string interpreter_mode = "none";  // reported by /health
  std::string image_mode = "none";
};

// Builds backends from a config document:
//   {"interpreter": <backend>, "image": <backend>}
// where <backend> is {"mock": "<demo example>"} for the scripted interpreter,
// {"mock": "stamper"} for the digest stamper, or a BackendConfig object.
// Missing entries leave that backend unconfigured.
ServiceBackends backends_from_config(const nlohmann::json& config);

struct ServiceOptions {
  std::filesystem::path data_dir;
  PipelineOptions pipeline;
  bool polish_prompts = false;  // rewrite frame prompts through the interpreter
  std::size_t idempotency_cache = 1024;
};

// ApiError code -> HTTP status.
int http_status(Errc code);

class Service {
 public:
  Service(ServiceOptions options, ServiceBackends backends);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  httplib::Server& server();

  // Binds to `host` on `port` (0 picks a free port) and returns the port.
  int bind(const std::string& host, int port);
  // Blocks serving requests until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace notana
