#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "notana/backend.hpp"
#include "notana/error.hpp"

namespace notana {

using nlohmann::json;

namespace {

std::atomic<std::uint64_t> g_connections{0};

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(Errc::InvalidArgument, "endpoint is not an absolute URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string credential(const BackendConfig& config) {
  const char* value = config.credential_env.empty() ? nullptr : std::getenv(config.credential_env.c_str());
  if (value == nullptr || *value == '\0') {
    throw Error(Errc::AuthMissing, "environment variable " + config.credential_env + " is not set",
                {{"env", config.credential_env}});
  }
  return value;
}

// Runs `request` with the retry policy from `config`. Retryable: Timeout,
// TransportError, HTTP 429 and 5xx.
HttpResponse post_with_retries(HttpTransport& transport, const HttpRequest& request, const BackendConfig& config,
                               const Sleeper& sleep) {
  const Sleeper nap = sleep ? sleep : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); });
  std::chrono::milliseconds delay{1000};
  for (int attempt = 0;; ++attempt) {
    const bool last = attempt >= config.max_retries;
    try {
      HttpResponse response = transport.post(request);
      if (response.status >= 200 && response.status < 300) return response;
      const bool retryable = response.status == 429 || response.status >= 500;
      Error err(Errc::TransportError, "backend answered HTTP " + std::to_string(response.status),
                {{"status", response.status}, {"body", response.body.substr(0, 2000)}});
      if (!retryable || last) throw err;
    } catch (const Error& e) {
      const bool retryable = e.code() == Errc::Timeout || e.code() == Errc::TransportError;
      if (!retryable || last) throw;
      if (e.details().is_object() && e.details().contains("status")) {
        const int status = e.details()["status"].get<int>();
        if (status != 429 && status < 500) throw;
      }
    }
    nap(delay);
    delay *= 2;
  }
}

json merge_params(json body, const json& params) {
  if (params.is_object()) {
    for (auto it = params.begin(); it != params.end(); ++it) body[it.key()] = it.value();
  }
  return body;
}

std::string png_data_b64(const Raster& image) { return base64_encode(encode_png(image)); }

}  // namespace

HttpResponse HttplibTransport::post(const HttpRequest& request) {
  const ParsedUrl url = split_url(request.url);
  httplib::Client client(url.origin);
  const auto seconds = static_cast<time_t>(request.timeout_seconds);
  const auto micros = static_cast<time_t>((request.timeout_seconds - static_cast<double>(seconds)) * 1e6);
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
  httplib::Headers headers;
  for (const auto& [k, v] : request.headers) headers.emplace(k, v);
  g_connections.fetch_add(1);
  auto result = client.Post(url.path, headers, request.body, "application/json");
  if (!result) {
    const auto err = result.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
      throw Error(Errc::Timeout, "backend did not answer within " + std::to_string(request.timeout_seconds) + " s");
    }
    throw Error(Errc::TransportError, "request to " + url.origin + " failed: " + httplib::to_string(err));
  }
  return {result->status, result->body};
}

std::uint64_t HttplibTransport::connections_attempted() noexcept { return g_connections.load(); }

OpenAiInterpreter::OpenAiInterpreter(BackendConfig config, std::shared_ptr<HttpTransport> transport, Sleeper sleep)
    : config_(std::move(config)), transport_(std::move(transport)), sleep_(std::move(sleep)) {
  config_.validate();
}

std::string OpenAiInterpreter::interpret(const Raster& image, std::string_view prompt) {
  const std::string key = credential(config_);
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", std::string(prompt)}});
  content.push_back({{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + png_data_b64(image)}}}});
  json body = {{"model", config_.model}, {"messages", json::array({{{"role", "user"}, {"content", content}}})}};
  body = merge_params(std::move(body), config_.params);

  HttpRequest request{config_.endpoint,
                      {{"Authorization", "Bearer " + key}, {"Content-Type", "application/json"}},
                      body.dump(),
                      config_.timeout_seconds};
  const HttpResponse response = post_with_retries(*transport_, request, config_, sleep_);
  const json parsed = json::parse(response.body, nullptr, false);
  try {
    return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw Error(Errc::BackendUnavailable, "interpreter reply has no choices[0].message.content",
                {{"body", response.body.substr(0, 2000)}});
  }
}

GeminiImageGenerator::GeminiImageGenerator(BackendConfig config, std::shared_ptr<HttpTransport> transport,
                                           Sleeper sleep)
    : config_(std::move(config)), transport_(std::move(transport)), sleep_(std::move(sleep)) {
  config_.validate();
}

Raster GeminiImageGenerator::generate_image(const Raster& image, std::string_view prompt) {
  const std::string key = credential(config_);
  json parts = json::array();
  parts.push_back({{"text", std::string(prompt)}});
  parts.push_back({{"inline_data", {{"mime_type", "image/png"}, {"data", png_data_b64(image)}}}});
  json body = {{"contents", json::array({{{"role", "user"}, {"parts", parts}}})},
               {"generationConfig", {{"responseModalities", json::array({"TEXT", "IMAGE"})}}}};
  body = merge_params(std::move(body), config_.params);

  HttpRequest request{config_.endpoint + "/models/" + config_.model + ":generateContent",
                      {{"x-goog-api-key", key}, {"Content-Type", "application/json"}},
                      body.dump(),
                      config_.timeout_seconds};
  const HttpResponse response = post_with_retries(*transport_, request, config_, sleep_);
  const json parsed = json::parse(response.body, nullptr, false);
  std::string text_reply;
  if (parsed.is_object() && parsed.contains("candidates") && !parsed["candidates"].empty()) {
    const json& candidate_parts = parsed["candidates"][0]["content"]["parts"];
    if (candidate_parts.is_array()) {
      for (const auto& part : candidate_parts) {
        for (const char* key_name : {"inline_data", "inlineData"}) {
          if (part.contains(key_name) && part[key_name].contains("data")) {
            const auto bytes = base64_decode(part[key_name]["data"].get<std::string>());
            return decode_png(bytes);
          }
        }
        if (part.contains("text") && part["text"].is_string()) text_reply += part["text"].get<std::string>();
      }
    }
  }
  throw Error(Errc::GenerationRejected, "image backend returned no image",
              {{"reason", text_reply.empty() ? response.body.substr(0, 2000) : text_reply}});
}

}  // namespace notana
