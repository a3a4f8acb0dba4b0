#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <stdexcept>
#include <string>

#include "atom/variant.hpp"

namespace atom::llm {

class GatewayError : public std::runtime_error {
 public:
  enum class Kind { Timeout, RateLimited, FixtureMissing, TransportError, InvalidRequest };
  GatewayError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct ChatRequest {
  std::string system_text;
  std::string user_text;
  std::optional<std::string> image_ref;
  double temperature = 0.0;  // 0 for reproducibility
  int max_retries = 3;       // total attempt budget, 1..5
  std::chrono::milliseconds timeout{30000};

  // Routing metadata for the replay backend; the remote backend ignores it.
  int scenario_id = 0;
  PromptVariant variant = PromptVariant::full_atom_constraints;
};

struct ChatResponse {
  enum class Backend { remote, replay };
  std::string text;
  Backend backend = Backend::replay;
  std::chrono::milliseconds latency{0};
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

/// Returns stored model outputs verbatim, keyed by (scenario, variant).
/// Bit-deterministic: the reproducibility anchor for the whole pipeline.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(std::filesystem::path fixtures_dir);
  ChatResponse complete(const ChatRequest& request) override;

  static std::filesystem::path fixture_path(const std::filesystem::path& dir, int scenario_id,
                                            PromptVariant variant);

 private:
  std::filesystem::path dir_;
};

struct HttpResult {
  int status = 0;
  std::string body;
};

/// (url, json_payload, api_key, timeout) -> response. Injectable so tests
/// can count attempts without a live endpoint.
using Transport = std::function<HttpResult(const std::string& url, const std::string& payload,
                                           const std::string& api_key,
                                           std::chrono::milliseconds timeout)>;

struct RemoteConfig {
  std::string endpoint;  // e.g. https://host/v1/chat/completions
  std::string model = "gpt-4-vision-preview";
  bool inline_images = true;  // base64 data URL vs pass-through reference
  std::chrono::milliseconds backoff_base{250};
};

/// Chat-completion style client with exponential backoff. The API key comes
/// only from the ATOM_API_KEY environment variable, never from config files.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteConfig config, Transport transport = default_transport());
  ChatResponse complete(const ChatRequest& request) override;

  static Transport default_transport();
  static std::string build_payload(const RemoteConfig& config, const ChatRequest& request);

 private:
  RemoteConfig config_;
  Transport transport_;
};

/// Shared front door: validates requests, bounds concurrent in-flight calls,
/// measures latency.
class Gateway {
 public:
  explicit Gateway(std::unique_ptr<Backend> backend, int max_in_flight = 4);
  ChatResponse complete(const ChatRequest& request);

 private:
  std::unique_ptr<Backend> backend_;
  std::counting_semaphore<64> slots_;
};

void validate(const ChatRequest& request);

}  // namespace atom::llm
