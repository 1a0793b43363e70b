#include "notana/backend.hpp"

#include <algorithm>
#include <cstring>

#include "fsutil.hpp"
#include "notana/error.hpp"

namespace notana {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(BackendKind v) { return v == BackendKind::interpreter ? "interpreter" : "image"; }

std::string_view to_string(ReplayMode v) {
  switch (v) {
    case ReplayMode::live: return "live";
    case ReplayMode::record: return "record";
    case ReplayMode::replay: return "replay";
  }
  return "live";
}

void BackendConfig::validate() const {
  if (!(timeout_seconds > 0)) throw Error(Errc::InvalidArgument, "backend timeout must be positive");
  if (max_retries < 0) throw Error(Errc::InvalidArgument, "max_retries must be non-negative");
  if (mode != ReplayMode::live && (!cassette || cassette->empty())) {
    throw Error(Errc::InvalidArgument, std::string(to_string(mode)) + " mode requires a cassette path");
  }
}

BackendConfig BackendConfig::from_json(const json& j, BackendKind kind) {
  BackendConfig c = kind == BackendKind::interpreter ? default_interpreter_config() : default_image_config();
  if (!j.is_object()) throw Error(Errc::InvalidArgument, "backend config must be an object");
  c.endpoint = j.value("endpoint", c.endpoint);
  c.model = j.value("model", c.model);
  c.credential_env = j.value("credential_env", c.credential_env);
  c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
  c.max_retries = j.value("max_retries", c.max_retries);
  const std::string mode = j.value("mode", std::string(to_string(c.mode)));
  if (mode == "live") {
    c.mode = ReplayMode::live;
  } else if (mode == "record") {
    c.mode = ReplayMode::record;
  } else if (mode == "replay") {
    c.mode = ReplayMode::replay;
  } else {
    throw Error(Errc::InvalidArgument, "unknown backend mode '" + mode + "'");
  }
  if (j.contains("cassette") && j["cassette"].is_string()) c.cassette = j["cassette"].get<std::string>();
  if (j.contains("params")) c.params = j["params"];
  c.validate();
  return c;
}

json BackendConfig::to_json() const {
  json out = {{"kind", to_string(kind)},
              {"endpoint", endpoint},
              {"model", model},
              {"credential_env", credential_env},
              {"timeout_seconds", timeout_seconds},
              {"max_retries", max_retries},
              {"mode", to_string(mode)},
              {"params", params}};
  if (cassette) out["cassette"] = cassette->string();
  return out;
}

BackendConfig default_interpreter_config() {
  BackendConfig c;
  c.kind = BackendKind::interpreter;
  c.endpoint = "https://api.openai.com/v1/chat/completions";
  c.model = "o3";
  c.credential_env = "NOTANA_INTERPRETER_KEY";
  return c;
}

BackendConfig default_image_config() {
  BackendConfig c;
  c.kind = BackendKind::image;
  c.endpoint = "https://generativelanguage.googleapis.com/v1beta";
  c.model = "gemini-2.5-flash-image-preview";
  c.credential_env = "NOTANA_IMAGE_KEY";
  return c;
}

std::string request_digest(BackendKind kind, const Raster& image, std::string_view prompt) {
  Sha256Builder h;
  auto field = [&h](std::string_view bytes) {
    h.update(std::to_string(bytes.size())).update(":").update(bytes).update("\n");
  };
  field("notana-request-v1");
  field(to_string(kind));
  field(std::to_string(image.width()) + "x" + std::to_string(image.height()));
  const auto px = image.bytes();
  field(std::string_view(reinterpret_cast<const char*>(px.data()), px.size()));
  field(prompt);
  return to_hex(h.finish());
}

// --- cassette ---------------------------------------------------------------

Cassette::Cassette(fs::path dir) : dir_(std::move(dir)) {}

std::optional<std::string> Cassette::lookup(std::string_view digest) const {
  std::lock_guard lock(mutex_);
  const auto path = dir_ / std::string(digest);
  if (!fs::is_regular_file(path)) return std::nullopt;
  return detail::read_file(path);
}

json Cassette::index() const {
  const auto path = dir_ / "index.json";
  if (!fs::is_regular_file(path)) return {{"entries", json::object()}};
  json parsed = json::parse(detail::read_file(path), nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) return {{"entries", json::object()}};
  return parsed;
}

void Cassette::store(std::string_view digest, std::string_view body, const json& metadata) {
  std::lock_guard lock(mutex_);
  fs::create_directories(dir_);
  detail::write_file_atomic(dir_ / std::string(digest), body);
  json idx;
  const auto index_path = dir_ / "index.json";
  if (fs::is_regular_file(index_path)) idx = json::parse(detail::read_file(index_path), nullptr, false);
  if (idx.is_discarded() || !idx.is_object()) idx = json::object();
  if (!idx.contains("entries")) idx["entries"] = json::object();
  idx["format"] = "notana-cassette-v1";
  json entry = metadata;
  entry["bytes"] = body.size();
  idx["entries"][std::string(digest)] = entry;
  detail::write_file_atomic(index_path, idx.dump(2) + "\n");
}

// --- record / replay ------------------------------------------------------------

namespace {

json entry_metadata(const BackendConfig& config, std::string_view prompt) {
  return {{"kind", to_string(config.kind)},
          {"model", config.model},
          {"endpoint", config.endpoint},
          {"params", config.params},
          {"prompt_sha256", sha256_hex(prompt)}};
}

[[noreturn]] void cassette_miss(const Cassette& cassette, const std::string& digest) {
  throw Error(Errc::CassetteMiss, "no cassette entry " + digest + " in " + cassette.dir().string(),
              {{"digest", digest}, {"cassette", cassette.dir().string()}});
}

}  // namespace

RecordReplayInterpreter::RecordReplayInterpreter(BackendConfig config, std::unique_ptr<InterpreterBackend> inner)
    : config_(std::move(config)), cassette_(config_.cassette.value_or("")), inner_(std::move(inner)) {
  config_.validate();
}

std::string RecordReplayInterpreter::interpret(const Raster& image, std::string_view prompt) {
  const std::string digest = request_digest(BackendKind::interpreter, image, prompt);
  if (config_.mode == ReplayMode::replay) {
    if (auto hit = cassette_.lookup(digest)) return *hit;
    cassette_miss(cassette_, digest);
  }
  if (!inner_) throw Error(Errc::BackendUnavailable, "record mode has no live backend");
  std::string reply = inner_->interpret(image, prompt);
  if (config_.mode == ReplayMode::record) cassette_.store(digest, reply, entry_metadata(config_, prompt));
  return reply;
}

RecordReplayImage::RecordReplayImage(BackendConfig config, std::unique_ptr<ImageBackend> inner)
    : config_(std::move(config)), cassette_(config_.cassette.value_or("")), inner_(std::move(inner)) {
  config_.validate();
}

Raster RecordReplayImage::generate_image(const Raster& image, std::string_view prompt) {
  const std::string digest = request_digest(BackendKind::image, image, prompt);
  if (config_.mode == ReplayMode::replay) {
    if (auto hit = cassette_.lookup(digest)) {
      return decode_png(std::span(reinterpret_cast<const std::uint8_t*>(hit->data()), hit->size()));
    }
    cassette_miss(cassette_, digest);
  }
  if (!inner_) throw Error(Errc::BackendUnavailable, "record mode has no live backend");
  Raster out = inner_->generate_image(image, prompt);
  if (config_.mode == ReplayMode::record) {
    const auto png = encode_png(out);
    cassette_.store(digest, std::string_view(reinterpret_cast<const char*>(png.data()), png.size()),
                    entry_metadata(config_, prompt));
  }
  return out;
}

// --- mocks ------------------------------------------------------------------

ScriptedInterpreter::ScriptedInterpreter(std::vector<std::string> replies) {
  rules_.push_back({"", std::deque<std::string>(replies.begin(), replies.end())});
}

ScriptedInterpreter::ScriptedInterpreter(std::vector<Rule> rules) : rules_(std::move(rules)) {}

std::string ScriptedInterpreter::interpret(const Raster&, std::string_view prompt) {
  std::lock_guard lock(mutex_);
  prompts_.emplace_back(prompt);
  for (auto& rule : rules_) {
    if (!rule.when_contains.empty() && prompt.find(rule.when_contains) == std::string_view::npos) continue;
    if (rule.replies.empty()) break;
    std::string reply = rule.replies.front();
    if (rule.replies.size() > 1) rule.replies.pop_front();
    return reply;
  }
  throw Error(Errc::BackendUnavailable, "scripted interpreter has no reply for this prompt");
}

std::size_t ScriptedInterpreter::call_count() const {
  std::lock_guard lock(mutex_);
  return prompts_.size();
}

std::vector<std::string> ScriptedInterpreter::prompts() const {
  std::lock_guard lock(mutex_);
  return prompts_;
}

namespace {

constexpr std::array<std::uint8_t, 4> kStampMagic{'N', 'T', 'A', '1'};

struct SlotRef {
  int x;
  int y;
};

std::vector<SlotRef> stamp_slots(const Raster& image) {
  std::vector<SlotRef> slots;
  const int per_row = image.width() / kStampSlotPixels;
  for (int r = 0; r < kStampRows && r < image.height(); ++r) {
    for (int s = 0; s < per_row; ++s) slots.push_back({s * kStampSlotPixels, image.height() - 1 - r});
  }
  return slots;
}

std::array<std::uint8_t, 36> read_slot(const Raster& image, SlotRef slot) {
  std::array<std::uint8_t, 36> bytes{};
  for (int p = 0; p < kStampSlotPixels; ++p) {
    const Rgba px = image.pixel(slot.x + p, slot.y);
    bytes[static_cast<std::size_t>(3 * p)] = px.r;
    bytes[static_cast<std::size_t>(3 * p + 1)] = px.g;
    bytes[static_cast<std::size_t>(3 * p + 2)] = px.b;
  }
  return bytes;
}

bool has_magic(const std::array<std::uint8_t, 36>& bytes) {
  return std::equal(kStampMagic.begin(), kStampMagic.end(), bytes.begin());
}

}  // namespace

Raster DigestStamper::generate_image(const Raster& image, std::string_view prompt) {
  Raster out = image;
  const Sha256 digest = sha256(prompt);
  for (const SlotRef slot : stamp_slots(out)) {
    if (has_magic(read_slot(out, slot))) continue;
    std::array<std::uint8_t, 36> bytes{};
    std::copy(kStampMagic.begin(), kStampMagic.end(), bytes.begin());
    std::copy(digest.begin(), digest.end(), bytes.begin() + 4);
    for (int p = 0; p < kStampSlotPixels; ++p) {
      out.set_pixel(slot.x + p, slot.y,
                    {bytes[static_cast<std::size_t>(3 * p)], bytes[static_cast<std::size_t>(3 * p + 1)],
                     bytes[static_cast<std::size_t>(3 * p + 2)], 255});
    }
    return out;
  }
  throw Error(Errc::GenerationRejected, "stamp region is full");
}

std::vector<Sha256> read_stamps(const Raster& image) {
  std::vector<Sha256> out;
  for (const SlotRef slot : stamp_slots(image)) {
    const auto bytes = read_slot(image, slot);
    if (!has_magic(bytes)) break;
    Sha256 d{};
    std::copy(bytes.begin() + 4, bytes.end(), d.begin());
    out.push_back(d);
  }
  return out;
}

// --- factories ----------------------------------------------------------------

std::unique_ptr<InterpreterBackend> make_interpreter(const BackendConfig& config,
                                                     std::shared_ptr<HttpTransport> transport) {
  config.validate();
  if (config.mode == ReplayMode::replay) return std::make_unique<RecordReplayInterpreter>(config);
  if (!transport) transport = std::make_shared<HttplibTransport>();
  auto live = std::make_unique<OpenAiInterpreter>(config, transport);
  if (config.mode == ReplayMode::record) return std::make_unique<RecordReplayInterpreter>(config, std::move(live));
  return live;
}

std::unique_ptr<ImageBackend> make_image_backend(const BackendConfig& config,
                                                 std::shared_ptr<HttpTransport> transport) {
  config.validate();
  if (config.mode == ReplayMode::replay) return std::make_unique<RecordReplayImage>(config);
  if (!transport) transport = std::make_shared<HttplibTransport>();
  auto live = std::make_unique<GeminiImageGenerator>(config, transport);
  if (config.mode == ReplayMode::record) return std::make_unique<RecordReplayImage>(config, std::move(live));
  return live;
}

}  // namespace notana
