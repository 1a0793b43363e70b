#pragma once

#include <atomic>
#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "notana/digest.hpp"
#include "notana/raster.hpp"

// Uniform contracts for the two model backends: an interpreter (vision-language
// model: image + prompt -> text) and an image generator (image + prompt ->
// image). Live HTTP adapters, record/replay cassettes and deterministic mocks
// all implement the same interfaces.
namespace notana {

class InterpreterBackend {
 public:
  virtual ~InterpreterBackend() = default;
  virtual std::string interpret(const Raster& image, std::string_view prompt) = 0;
};

class ImageBackend {
 public:
  virtual ~ImageBackend() = default;
  virtual Raster generate_image(const Raster& image, std::string_view prompt) = 0;
};

enum class BackendKind { interpreter, image };
enum class ReplayMode { live, record, replay };

std::string_view to_string(BackendKind v);
std::string_view to_string(ReplayMode v);

struct BackendConfig {
  BackendKind kind = BackendKind::interpreter;
  std::string endpoint;
  std::string model;
  std::string credential_env;  // name of the env var holding the API key
  double timeout_seconds = 120.0;
  int max_retries = 2;
  ReplayMode mode = ReplayMode::live;
  std::optional<std::filesystem::path> cassette;
  // Extra provider request fields (sampling parameters etc.), passed through.
  nlohmann::json params = nlohmann::json::object();

  // Throws InvalidArgument: timeout <= 0, negative retries, replay/record
  // without a cassette path.
  void validate() const;
  static BackendConfig from_json(const nlohmann::json& j, BackendKind kind);
  // Never contains the credential value, only the variable name.
  nlohmann::json to_json() const;
};

// Defaults: OpenAI-compatible chat completions for the interpreter, Gemini
// generateContent for images; keys from NOTANA_INTERPRETER_KEY / NOTANA_IMAGE_KEY.
BackendConfig default_interpreter_config();
BackendConfig default_image_config();

// Cassette key: SHA-256 over the request kind, raster dimensions, raw RGBA
// bytes and prompt, each length-prefixed. Stable across runs and platforms.
std::string request_digest(BackendKind kind, const Raster& image, std::string_view prompt);

// One file per entry named by the hex digest holding the reply bytes, plus an
// index.json manifest with per-entry metadata.
class Cassette {
 public:
  explicit Cassette(std::filesystem::path dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::optional<std::string> lookup(std::string_view digest) const;
  void store(std::string_view digest, std::string_view body, const nlohmann::json& metadata);
  nlohmann::json index() const;

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
};

// --- HTTP transport ---------------------------------------------------------

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  double timeout_seconds = 120.0;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Throws Error(Timeout) or Error(TransportError) when no response arrives.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

// cpp-httplib client. Counts every connection attempt it makes, so tests can
// assert that offline paths never reach the network.
class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse post(const HttpRequest& request) override;
  static std::uint64_t connections_attempted() noexcept;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// Live adapters retry up to config.max_retries times on transport errors,
// timeouts, 429 and 5xx, sleeping 1 s, 2 s, 4 s ... between attempts.
class OpenAiInterpreter final : public InterpreterBackend {
 public:
  OpenAiInterpreter(BackendConfig config, std::shared_ptr<HttpTransport> transport, Sleeper sleep = {});
  std::string interpret(const Raster& image, std::string_view prompt) override;

 private:
  BackendConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleep_;
};

class GeminiImageGenerator final : public ImageBackend {
 public:
  GeminiImageGenerator(BackendConfig config, std::shared_ptr<HttpTransport> transport, Sleeper sleep = {});
  Raster generate_image(const Raster& image, std::string_view prompt) override;

 private:
  BackendConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleep_;
};

// --- record / replay ----------------------------------------------------------

// Replay serves cassette entries only and needs no inner backend; a miss throws
// CassetteMiss naming the digest. Record forwards to `inner` and stores the reply.
class RecordReplayInterpreter final : public InterpreterBackend {
 public:
  RecordReplayInterpreter(BackendConfig config, std::unique_ptr<InterpreterBackend> inner = nullptr);
  std::string interpret(const Raster& image, std::string_view prompt) override;

 private:
  BackendConfig config_;
  Cassette cassette_;
  std::unique_ptr<InterpreterBackend> inner_;
};

class RecordReplayImage final : public ImageBackend {
 public:
  RecordReplayImage(BackendConfig config, std::unique_ptr<ImageBackend> inner = nullptr);
  Raster generate_image(const Raster& image, std::string_view prompt) override;

 private:
  BackendConfig config_;
  Cassette cassette_;
  std::unique_ptr<ImageBackend> inner_;
};

// --- deterministic mocks ----------------------------------------------------------

// Scripted replies. Each rule owns a queue; the first rule whose `when_contains`
// occurs in the prompt (empty matches anything) pops its next reply, and the
// last reply of a queue repeats once the queue is down to one.
class ScriptedInterpreter final : public InterpreterBackend {
 public:
  struct Rule {
    std::string when_contains;
    std::deque<std::string> replies;
  };

  ScriptedInterpreter() = default;
  explicit ScriptedInterpreter(std::vector<std::string> replies);
  explicit ScriptedInterpreter(std::vector<Rule> rules);

  std::string interpret(const Raster& image, std::string_view prompt) override;

  std::size_t call_count() const;
  std::vector<std::string> prompts() const;

 private:
  mutable std::mutex mutex_;
  std::vector<Rule> rules_;
  std::vector<std::string> prompts_;
};

// Copies the input and appends SHA-256(prompt) into a reserved stamp region at
// the bottom of the image, so each output carries the digests of every prompt
// in its conditioning chain. Throws GenerationRejected when the region is full.
class DigestStamper final : public ImageBackend {
 public:
  Raster generate_image(const Raster& image, std::string_view prompt) override;
};

// Stamp layout: rows from the bottom up, each holding floor(width / 12) slots;
// a slot is 12 pixels whose RGB bytes carry the 4-byte magic "NTA1" followed by
// the 32 digest bytes. Alpha of stamped pixels is 255. At most 4 rows are used.
inline constexpr int kStampSlotPixels = 12;
inline constexpr int kStampRows = 4;
std::vector<Sha256> read_stamps(const Raster& image);

// Builds the configured backend: replay needs no network; record wraps the
// live adapter; live uses HttplibTransport.
std::unique_ptr<InterpreterBackend> make_interpreter(const BackendConfig& config,
                                                     std::shared_ptr<HttpTransport> transport = nullptr);
std::unique_ptr<ImageBackend> make_image_backend(const BackendConfig& config,
                                                 std::shared_ptr<HttpTransport> transport = nullptr);

}  // namespace notana
