#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "qsage/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

#include "httplib.h"
#include "qsage/util.hpp"

namespace qsage {

namespace {

using Clock = std::chrono::steady_clock;
using json = nlohmann::json;

const std::regex &endpoint_regex() {
  static const std::regex re(R"(^(https?)://([A-Za-z0-9.\-]+|\[[0-9A-Fa-f:]+\])(:[0-9]{1,5})?(/[^\s]*)?$)");
  return re;
}

struct Endpoint {
  std::string origin; ///< scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string &url) {
  std::smatch m;
  if (!std::regex_match(url, m, endpoint_regex()))
    throw Error(ErrorCode::Config, "malformed endpoint URL '" + url + "'");
  return {m[1].str() + "://" + m[2].str() + m[3].str(), m[4].matched ? m[4].str() : "/"};
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void sleep_for_s(double s) {
  if (s > 0) std::this_thread::sleep_for(std::chrono::duration<double>(s));
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      if (pos < text.size()) lines.push_back(text.substr(pos));
      break;
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

} // namespace

double RetryPolicy::backoff(int attempt) const {
  const double d = initial_backoff_s * std::pow(multiplier, std::max(0, attempt - 1));
  return std::min(d, max_backoff_s);
}

void ModelConfig::validate() const {
  if (name.empty()) throw Error(ErrorCode::Config, "model name is empty");
  if (retry.max_attempts < 1) throw Error(ErrorCode::Config, "retry.max_attempts must be >= 1");
  if (retry.initial_backoff_s < 0 || retry.multiplier < 1 || retry.max_backoff_s < 0)
    throw Error(ErrorCode::Config, "invalid retry backoff for model '" + name + "'");
  if (requests_per_second < 0 || burst < 1)
    throw Error(ErrorCode::Config, "invalid rate limit for model '" + name + "'");
  if (provider == "replay") {
    if (replay_dir.empty()) throw Error(ErrorCode::Config, "replay model '" + name + "' has no replay_dir");
    return;
  }
  if (provider != "chat") throw Error(ErrorCode::Config, "unknown provider '" + provider + "'");
  if (model_id.empty()) throw Error(ErrorCode::Config, "model '" + name + "' has no model_id");
  if (auth_env.empty()) throw Error(ErrorCode::Config, "model '" + name + "' has no auth env var");
  if (max_tokens < 1 || request_timeout_s <= 0)
    throw Error(ErrorCode::Config, "invalid sampling limits for model '" + name + "'");
  split_endpoint(endpoint);
}

json ModelConfig::to_json() const {
  return {
      {"name", name},
      {"provider", provider},
      {"model_id", model_id},
      {"endpoint", endpoint},
      {"auth_env", auth_env},
      {"temperature", temperature},
      {"max_tokens", max_tokens},
      {"request_timeout_s", request_timeout_s},
      {"retry",
       {{"max_attempts", retry.max_attempts},
        {"initial_backoff_s", retry.initial_backoff_s},
        {"multiplier", retry.multiplier},
        {"max_backoff_s", retry.max_backoff_s}}},
      {"requests_per_second", requests_per_second},
      {"burst", burst},
      {"replay_dir", replay_dir.generic_string()},
      {"replay_repeat_last", replay_repeat_last},
  };
}

ModelConfig ModelConfig::from_json(const json &j, const std::filesystem::path &base_dir) {
  ModelConfig c;
  try {
    c.name = j.at("name").get<std::string>();
    c.provider = j.value("provider", c.provider);
    c.model_id = j.value("model_id", c.name);
    c.endpoint = j.value("endpoint", c.endpoint);
    c.auth_env = j.value("auth_env", c.auth_env);
    c.temperature = j.value("temperature", c.temperature);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.request_timeout_s = j.value("request_timeout_s", c.request_timeout_s);
    if (j.contains("retry")) {
      const auto &r = j.at("retry");
      c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
      c.retry.initial_backoff_s = r.value("initial_backoff_s", c.retry.initial_backoff_s);
      c.retry.multiplier = r.value("multiplier", c.retry.multiplier);
      c.retry.max_backoff_s = r.value("max_backoff_s", c.retry.max_backoff_s);
    }
    c.requests_per_second = j.value("requests_per_second", c.requests_per_second);
    c.burst = j.value("burst", c.burst);
    if (j.contains("replay_dir")) {
      std::filesystem::path p = j.at("replay_dir").get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      c.replay_dir = p.lexically_normal();
    }
    c.replay_repeat_last = j.value("replay_repeat_last", c.replay_repeat_last);
  } catch (const json::exception &e) {
    throw Error(ErrorCode::Config, std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string_view to_string(GatewayFailure f) {
  switch (f) {
  case GatewayFailure::Auth: return "auth";
  case GatewayFailure::RetriesExhausted: return "retries_exhausted";
  case GatewayFailure::Malformed: return "malformed_response";
  case GatewayFailure::Replay: return "replay";
  }
  return "replay";
}

ReplayProvider::ReplayProvider(ModelConfig config) : config_(std::move(config)) {}

std::filesystem::path ReplayProvider::fixture_dir(const EpisodeKey &key) const {
  namespace fs = std::filesystem;
  const fs::path base = config_.replay_dir;
  const fs::path candidates[] = {
      base / key.instance_id / key.variant / ("rep" + std::to_string(key.repetition)),
      base / key.instance_id / key.variant,
      base / key.instance_id,
      base / "default",
  };
  for (const auto &c : candidates)
    if (fs::is_directory(c)) return c;
  throw GatewayError(GatewayFailure::Replay,
                     "no replay fixtures for " + key.instance_id + " under " + base.string());
}

GenerationResult ReplayProvider::generate(const Conversation &conv, const EpisodeKey &key) {
  namespace fs = std::filesystem;
  const auto &msgs = conv.messages();
  if (msgs.empty() || msgs.back().role != Role::User)
    throw Error(ErrorCode::InvalidArgument, "conversation must end with a user message");
  const auto t0 = Clock::now();
  const fs::path dir = fixture_dir(key);
  std::vector<fs::path> files;
  for (const auto &e : fs::directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw GatewayError(GatewayFailure::Replay, "empty fixture directory " + dir.string());
  const std::size_t call = conv.turns(); // 0-based index of this reply
  std::size_t idx = call;
  if (idx >= files.size()) {
    if (!config_.replay_repeat_last)
      throw GatewayError(GatewayFailure::Replay, "replay fixtures exhausted at reply " +
                                                     std::to_string(call + 1) + " in " + dir.string());
    idx = files.size() - 1;
  }
  const fs::path &file = files[idx];
  const std::string text = read_text_file(file);
  if (file.extension() == ".error") throw GatewayError(GatewayFailure::Malformed, trim(text), 1);
  GenerationResult r;
  r.raw_text = text;
  r.extracted_code = extract_code(text);
  r.latency_s = seconds_since(t0);
  r.attempts = 1;
  r.metadata = {{"provider", "replay"}, {"fixture", file.filename().string()}};
  return r;
}

TokenBucket::TokenBucket(double rate_per_s, int burst)
    : rate_(rate_per_s), capacity_(std::max(1, burst)), tokens_(capacity_), last_(Clock::now()) {}

void TokenBucket::acquire() {
  if (rate_ <= 0) return;
  for (;;) {
    double wait = 0;
    {
      std::lock_guard lock(mutex_);
      const auto now = Clock::now();
      tokens_ = std::min(capacity_, tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = (1.0 - tokens_) / rate_;
    }
    sleep_for_s(wait);
  }
}

ChatProvider::ChatProvider(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  if (config_.requests_per_second > 0)
    limiter_ = std::make_unique<TokenBucket>(config_.requests_per_second, config_.burst);
}

json ChatProvider::request_body(const Conversation &conv) const {
  return {{"model", config_.model_id},
          {"messages", conv.to_json()},
          {"temperature", config_.temperature},
          {"max_tokens", config_.max_tokens}};
}

GenerationResult ChatProvider::generate(const Conversation &conv, const EpisodeKey &) {
  const char *token = std::getenv(config_.auth_env.c_str());
  if (!token || !*token)
    throw GatewayError(GatewayFailure::Auth,
                       "environment variable " + config_.auth_env + " is not set", 0);
  const Endpoint ep = split_endpoint(config_.endpoint);
  const std::string body = request_body(conv).dump();
  const httplib::Headers headers{{"Authorization", std::string("Bearer ") + token}};

  const auto t0 = Clock::now();
  std::string last_failure;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    if (limiter_) limiter_->acquire();
    httplib::Client client(ep.origin);
    const auto timeout = std::chrono::duration<double>(config_.request_timeout_s);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    auto res = client.Post(ep.path, headers, body, "application/json");

    bool transient = false;
    if (!res) {
      transient = true;
      last_failure = "transport error: " + httplib::to_string(res.error());
    } else if (res->status == 401 || res->status == 403) {
      throw GatewayError(GatewayFailure::Auth,
                         "endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")",
                         attempt);
    } else if (res->status == 429 || res->status >= 500) {
      transient = true;
      last_failure = "HTTP " + std::to_string(res->status);
    } else if (res->status != 200) {
      throw GatewayError(GatewayFailure::Malformed,
                         "HTTP " + std::to_string(res->status) + ": " + truncate_tail(res->body, 500),
                         attempt);
    } else {
      std::string content;
      json meta = json::object();
      try {
        const json reply = json::parse(res->body);
        content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
        if (reply.contains("usage")) meta["usage"] = reply["usage"];
        if (reply.contains("model")) meta["model"] = reply["model"];
        if (reply.contains("id")) meta["id"] = reply["id"];
        if (reply["choices"][0].contains("finish_reason"))
          meta["finish_reason"] = reply["choices"][0]["finish_reason"];
      } catch (const json::exception &e) {
        throw GatewayError(GatewayFailure::Malformed,
                           std::string("unexpected response body: ") + e.what(), attempt);
      }
      GenerationResult r;
      r.raw_text = std::move(content);
      r.extracted_code = extract_code(r.raw_text);
      r.latency_s = seconds_since(t0);
      r.attempts = attempt;
      meta["provider"] = "chat";
      r.metadata = std::move(meta);
      return r;
    }
    if (transient && attempt < config_.retry.max_attempts) sleep_for_s(config_.retry.backoff(attempt));
  }
  throw GatewayError(GatewayFailure::RetriesExhausted,
                     "gave up after " + std::to_string(config_.retry.max_attempts) +
                         " attempts: " + last_failure,
                     config_.retry.max_attempts);
}

std::unique_ptr<Provider> make_provider(const ModelConfig &config) {
  config.validate();
  if (config.provider == "replay") return std::make_unique<ReplayProvider>(config);
  return std::make_unique<ChatProvider>(config);
}

bool looks_like_statement(std::string_view raw) {
  static const std::regex patterns[] = {
      std::regex(R"(^\s*(import\s+[A-Za-z_][\w.]*|from\s+[\w.]+\s+import\s+\S).*$)"),
      std::regex(R"(^\s*(async\s+)?(def|class)\s+[A-Za-z_]\w*.*:\s*(#.*)?$)"),
      std::regex(R"(^\s*[A-Za-z_][\w.\[\]'", ]*\s*(\+|-|\*|/|//|%|\*\*)?=\s*[^=\s].*$)"),
      std::regex(R"(^\s*[A-Za-z_][\w.]*\(.*\)\s*(#.*)?$)"),
      std::regex(R"(^\s*(for|while|if|elif|with|try|except|finally|else)\b.*:\s*(#.*)?$)"),
      std::regex(R"(^\s*(return|raise|yield|pass|break|continue|assert|global|del)\b.*$)"),
      std::regex(R"(^\s*@[A-Za-z_][\w.]*(\(.*\))?\s*$)"),
      std::regex(R"(^\s*[\)\]\}],?\s*$)"),
  };
  const std::string line(raw);
  for (const auto &re : patterns)
    if (std::regex_match(line, re)) return true;
  return false;
}

std::optional<std::string> extract_code(std::string_view raw_text) {
  const auto lines = split_lines(raw_text);

  std::optional<std::string> best;
  bool in_block = false;
  std::string current;
  auto close = [&] {
    if (!best || current.size() > best->size()) best = current;
    current.clear();
  };
  for (const auto line : lines) {
    const std::string t = trim(line);
    if (t.rfind("```", 0) == 0) {
      if (in_block) {
        if (t.find_first_not_of('`') == std::string::npos) {
          close();
          in_block = false;
          continue;
        }
      } else {
        in_block = true;
        continue;
      }
    }
    if (in_block) {
      current.append(line);
      current += '\n';
    }
  }
  if (in_block) close(); // unterminated final block
  if (best && !trim(*best).empty()) return best;

  std::size_t counted = 0, statements = 0;
  for (const auto line : lines) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    ++counted;
    if (looks_like_statement(line)) ++statements;
  }
  if (counted >= 3 && statements * 5 >= counted * 3) return std::string(raw_text);
  return std::nullopt;
}

} // namespace qsage
