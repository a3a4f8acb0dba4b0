#include "atom/llm_gateway.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "atom/data_paths.hpp"
#include "atom/text.hpp"

namespace atom::llm {

using nlohmann::json;

void validate(const ChatRequest& request) {
  if (request.temperature < 0)
    throw GatewayError(GatewayError::Kind::InvalidRequest, "temperature must be >= 0");
  if (request.max_retries < 1 || request.max_retries > 5)
    throw GatewayError(GatewayError::Kind::InvalidRequest, "max_retries must be in 1..5");
}

// ---------------------------------------------------------------------------
// Replay

ReplayBackend::ReplayBackend(std::filesystem::path fixtures_dir) : dir_(std::move(fixtures_dir)) {}

std::filesystem::path ReplayBackend::fixture_path(const std::filesystem::path& dir, int scenario_id,
                                                  PromptVariant variant) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "task_%02d", scenario_id);
  const auto task_dir = dir / buf;
  if (variant == PromptVariant::action_generation) return task_dir / "actions.json";
  if (variant == PromptVariant::full_atom_constraints) return task_dir / "needs.json";
  return task_dir / ("needs." + to_string(variant) + ".json");
}

ChatResponse ReplayBackend::complete(const ChatRequest& request) {
  validate(request);
  const auto path = fixture_path(dir_, request.scenario_id, request.variant);
  if (request.scenario_id < 1 || !std::filesystem::exists(path))
    throw GatewayError(GatewayError::Kind::FixtureMissing,
                       "no replay fixture for scenario " + std::to_string(request.scenario_id) +
                           ", variant " + to_string(request.variant) + " (" + path.string() + ")");
  ChatResponse resp;
  resp.text = read_file(path);
  resp.backend = ChatResponse::Backend::replay;
  resp.latency = std::chrono::milliseconds{0};
  return resp;
}

// ---------------------------------------------------------------------------
// Remote

RemoteBackend::RemoteBackend(RemoteConfig config, Transport transport)
    : config_(std::move(config)), transport_(std::move(transport)) {}

std::string RemoteBackend::build_payload(const RemoteConfig& config, const ChatRequest& request) {
  json user_content = json::array();
  user_content.push_back({{"type", "text"}, {"text", request.user_text}});
  if (request.image_ref) {
    std::string url = *request.image_ref;
    if (config.inline_images) {
      url = "data:image/jpeg;base64," + text::base64_encode(read_file(*request.image_ref));
    }
    user_content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
  }
  json payload = {
      {"model", config.model},
      {"temperature", request.temperature},
      {"messages",
       json::array({{{"role", "system"}, {"content", request.system_text}},
                    {{"role", "user"}, {"content", user_content}}})},
  };
  return payload.dump();
}

Transport RemoteBackend::default_transport() {
  return [](const std::string& url, const std::string& payload, const std::string& api_key,
            std::chrono::milliseconds timeout) -> HttpResult {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
      throw GatewayError(GatewayError::Kind::InvalidRequest, "endpoint URL missing scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string host = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(host);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout));
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      if (res.error() == httplib::Error::ConnectionTimeout || res.error() == httplib::Error::Read)
        throw GatewayError(GatewayError::Kind::Timeout, "request timed out: " + url);
      throw GatewayError(GatewayError::Kind::TransportError,
                         "transport failure: " + httplib::to_string(res.error()));
    }
    return {res->status, res->body};
  };
}

ChatResponse RemoteBackend::complete(const ChatRequest& request) {
  validate(request);
  const char* key = std::getenv("ATOM_API_KEY");
  const std::string payload = build_payload(config_, request);

  std::optional<GatewayError> last_error;
  for (int attempt = 1; attempt <= request.max_retries; ++attempt) {
    if (attempt > 1 && config_.backoff_base.count() > 0)
      std::this_thread::sleep_for(config_.backoff_base * (1 << (attempt - 2)));
    try {
      HttpResult res = transport_(config_.endpoint, payload, key ? key : "", request.timeout);
      if (res.status == 429) {
        last_error = GatewayError(GatewayError::Kind::RateLimited, "rate limited (429)");
        continue;
      }
      if (res.status < 200 || res.status >= 300) {
        last_error = GatewayError(GatewayError::Kind::TransportError,
                                  "endpoint returned status " + std::to_string(res.status));
        continue;
      }
      json body = json::parse(res.body, nullptr, false);
      if (body.is_discarded() || !body.contains("choices") || body["choices"].empty()) {
        last_error =
            GatewayError(GatewayError::Kind::TransportError, "malformed completion response");
        continue;
      }
      ChatResponse out;
      out.text = body["choices"][0]["message"]["content"].get<std::string>();
      out.backend = ChatResponse::Backend::remote;
      if (out.text.empty()) {
        last_error = GatewayError(GatewayError::Kind::TransportError, "empty completion text");
        continue;
      }
      return out;
    } catch (const GatewayError& e) {
      last_error = e;
    } catch (const std::exception& e) {
      last_error = GatewayError(GatewayError::Kind::TransportError, e.what());
    }
  }
  throw last_error.value_or(
      GatewayError(GatewayError::Kind::TransportError, "remote completion failed"));
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::unique_ptr<Backend> backend, int max_in_flight)
    : backend_(std::move(backend)), slots_(max_in_flight) {
  if (max_in_flight < 1 || max_in_flight > 64)
    throw GatewayError(GatewayError::Kind::InvalidRequest, "max_in_flight must be in 1..64");
}

ChatResponse Gateway::complete(const ChatRequest& request) {
  validate(request);
  slots_.acquire();
  const auto start = std::chrono::steady_clock::now();
  try {
    ChatResponse resp = backend_->complete(request);
    if (resp.backend == ChatResponse::Backend::remote)
      resp.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);
    slots_.release();
    return resp;
  } catch (...) {
    slots_.release();
    throw;
  }
}

}  // namespace atom::llm
