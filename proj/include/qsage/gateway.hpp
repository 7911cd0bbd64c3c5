#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "qsage/error.hpp"
#include "qsage/prompts.hpp"

namespace qsage {

struct RetryPolicy {
  int max_attempts = 4;
  double initial_backoff_s = 1.0;
  double multiplier = 2.0;
  double max_backoff_s = 30.0;

  double backoff(int attempt) const; ///< delay after failed attempt `attempt` (1-based)
};

struct ModelConfig {
  std::string name;     ///< label used in repository paths and reports
  std::string provider = "chat"; ///< "chat" (HTTP chat completions) or "replay"
  std::string model_id;
  std::string endpoint; ///< e.g. https://host/v1/chat/completions
  std::string auth_env; ///< env var holding the bearer token
  double temperature = 0.0;
  int max_tokens = 4096;
  double request_timeout_s = 300.0;
  RetryPolicy retry;
  double requests_per_second = 0.0; ///< 0 disables rate limiting
  int burst = 1;
  std::filesystem::path replay_dir;
  bool replay_repeat_last = false;

  /// Throws Config on a malformed endpoint, max_attempts < 1 and similar.
  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json &j, const std::filesystem::path &base_dir = {});
};

enum class GatewayFailure { Auth, RetriesExhausted, Malformed, Replay };

std::string_view to_string(GatewayFailure f);

/// Turn-level infrastructure error raised by providers.
class GatewayError : public Error {
public:
  GatewayError(GatewayFailure kind, const std::string &what, int attempts = 0)
      : Error(ErrorCode::Infrastructure, what), kind_(kind), attempts_(attempts) {}
  GatewayFailure kind() const { return kind_; }
  int attempts() const { return attempts_; }

private:
  GatewayFailure kind_;
  int attempts_;
};

struct GenerationResult {
  std::string raw_text;
  std::optional<std::string> extracted_code;
  double latency_s = 0.0;
  int attempts = 1;
  nlohmann::json metadata = nlohmann::json::object();
};

/// Identifies the episode a request belongs to (replay fixtures are per episode).
struct EpisodeKey {
  std::string instance_id;
  std::string model;
  std::string variant;
  int repetition = 0;
};

class Provider {
public:
  virtual ~Provider() = default;
  /// The conversation ends with the user message to answer. Never mutated.
  virtual GenerationResult generate(const Conversation &conv, const EpisodeKey &key) = 0;
  virtual const ModelConfig &config() const = 0;
};

/// Serves reply n of an episode from the n-th fixture file (sorted by name)
/// of the most specific existing directory among
///   <dir>/<instance>/<variant>/rep<k>, <dir>/<instance>/<variant>,
///   <dir>/<instance>, <dir>/default.
/// n is derived from the conversation, so replies depend only on it.
/// A fixture named *.error raises a Malformed infrastructure error.
class ReplayProvider : public Provider {
public:
  explicit ReplayProvider(ModelConfig config);
  GenerationResult generate(const Conversation &conv, const EpisodeKey &key) override;
  const ModelConfig &config() const override { return config_; }

  std::filesystem::path fixture_dir(const EpisodeKey &key) const;

private:
  ModelConfig config_;
};

class TokenBucket {
public:
  TokenBucket(double rate_per_s, int burst);
  /// Blocks until one token is available.
  void acquire();

private:
  std::mutex mutex_;
  double rate_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

/// HTTP client for chat-completions endpoints: POST {model, messages,
/// temperature, max_tokens}, consumes choices[0].message.content.
/// Retries transport errors, 429 and 5xx per policy.
class ChatProvider : public Provider {
public:
  explicit ChatProvider(ModelConfig config);
  GenerationResult generate(const Conversation &conv, const EpisodeKey &key) override;
  const ModelConfig &config() const override { return config_; }

  nlohmann::json request_body(const Conversation &conv) const;

private:
  ModelConfig config_;
  std::unique_ptr<TokenBucket> limiter_;
};

std::unique_ptr<Provider> make_provider(const ModelConfig &config);

/// Largest fenced code block; otherwise the whole reply if it looks like
/// code (at least 3 lines, at least 60% statement-like); otherwise none.
std::optional<std::string> extract_code(std::string_view raw_text);

/// Statement-like line test used by the extraction heuristic.
bool looks_like_statement(std::string_view line);

} // namespace qsage
