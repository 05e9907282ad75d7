#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ptzlm/error.hpp"
#include "ptzlm/instance.hpp"
#include "ptzlm/prompt.hpp"

namespace ptzlm {

enum class EndpointKind { RemoteChat, Scripted };

/// Offline playback source: exact fingerprint matches first, then an optional
/// responder callback (used by in-process generators and tests).
struct Transcript {
  std::map<std::string, std::string> responses;
  std::function<std::optional<std::string>(const AssembledPrompt&)> responder;
};

struct EndpointSpec {
  EndpointKind kind = EndpointKind::Scripted;
  std::string base_url;
  std::string model_name = "scripted";
  double timeout = 60.0;  // seconds
  int max_retries = 2;
  double temperature = 0.0;
  int max_output_tokens = 512;
  std::string auth_token_env_var;
  std::shared_ptr<const Transcript> transcript;
  std::size_t max_concurrency = 4;
  double backoff_initial = 0.25;  // seconds, doubled per retry
  std::string audit_log;          // JSONL path, empty disables
};

struct TokenCounts {
  std::int64_t input = 0;
  std::int64_t output = 0;
};

struct ChatExchange {
  std::uint64_t request_id = 0;
  std::string system_text;
  std::string user_text;
  std::string response_text;
  double latency = 0.0;
  std::optional<TokenCounts> token_counts;
  std::optional<std::string> transport_error;
};

inline void check_endpoint(const EndpointSpec& spec) {
  if (!(spec.timeout > 0.0)) throw Error(ErrorCode::InvalidEndpoint, "timeout must be > 0");
  if (spec.max_retries < 0) throw Error(ErrorCode::InvalidEndpoint, "max_retries must be >= 0");
  if (spec.max_concurrency < 1) throw Error(ErrorCode::InvalidEndpoint, "max_concurrency must be >= 1");
  if (spec.kind == EndpointKind::Scripted && !spec.transcript)
    throw Error(ErrorCode::InvalidEndpoint, "scripted endpoint requires a transcript");
  if (spec.kind == EndpointKind::RemoteChat && spec.base_url.empty())
    throw Error(ErrorCode::InvalidEndpoint, "remote-chat endpoint requires base_url");
}

namespace detail {

class ConcurrencyLimiter {
 public:
  explicit ConcurrencyLimiter(std::size_t cap) : available_(cap) {}

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
  }

  void release() {
    {
      std::lock_guard lock(mu_);
      ++available_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t available_;
};

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

inline SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  SplitUrl out;
  out.origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  out.prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

struct AttemptFailure {
  ErrorCode code;
  std::string message;
  bool transient;
};

}  // namespace detail

/// Client for one endpoint. Shareable across threads; each completion gets a
/// fresh correlation id and at most `max_concurrency` run at once.
class Gateway {
 public:
  explicit Gateway(EndpointSpec spec)
      : spec_(std::move(spec)), limiter_(std::make_unique<detail::ConcurrencyLimiter>(spec_.max_concurrency)) {
    check_endpoint(spec_);
  }

  const EndpointSpec& spec() const { return spec_; }

  ChatExchange complete(const AssembledPrompt& prompt) {
    limiter_->acquire();
    struct Release {
      detail::ConcurrencyLimiter* l;
      ~Release() { l->release(); }
    } release{limiter_.get()};

    ChatExchange ex;
    ex.request_id = ++next_id_;
    ex.system_text = prompt.system_text;
    ex.user_text = prompt.user_text;
    const auto start = std::chrono::steady_clock::now();
    if (spec_.kind == EndpointKind::Scripted)
      play_back(prompt, ex);
    else
      call_remote(prompt, ex);
    ex.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (ex.response_text.empty() && !ex.transport_error) ex.transport_error = "empty completion content";
    audit(prompt, ex);
    return ex;
  }

 private:
  void play_back(const AssembledPrompt& prompt, ChatExchange& ex) const {
    const auto& t = *spec_.transcript;
    if (auto it = t.responses.find(prompt.fingerprint); it != t.responses.end()) {
      ex.response_text = it->second;
      return;
    }
    if (t.responder) {
      if (auto text = t.responder(prompt)) {
        ex.response_text = std::move(*text);
        return;
      }
    }
    throw Error(ErrorCode::MalformedEndpointReply, "prompt " + prompt.fingerprint + " not in transcript");
  }

  void call_remote(const AssembledPrompt& prompt, ChatExchange& ex) const {
    const auto url = detail::split_url(spec_.base_url);
    nlohmann::json body{{"model", spec_.model_name},
                        {"messages",
                         nlohmann::json::array({{{"role", "system"}, {"content", prompt.system_text}},
                                                {{"role", "user"}, {"content", prompt.user_text}}})},
                        {"temperature", spec_.temperature},
                        {"max_tokens", spec_.max_output_tokens}};
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!spec_.auth_token_env_var.empty()) {
      if (const char* token = std::getenv(spec_.auth_token_env_var.c_str()); token && *token)
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    const auto seconds = static_cast<time_t>(spec_.timeout);
    const auto micros = static_cast<time_t>((spec_.timeout - static_cast<double>(seconds)) * 1e6);
    double backoff = spec_.backoff_initial;
    detail::AttemptFailure last{ErrorCode::TransportError, "no attempt made", false};
    for (int attempt = 0; attempt <= spec_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
        backoff *= 2.0;
      }
      httplib::Client client(url.origin);
      client.set_connection_timeout(seconds, micros);
      client.set_read_timeout(seconds, micros);
      client.set_write_timeout(seconds, micros);

      const auto t0 = std::chrono::steady_clock::now();
      auto res = client.Post(url.prefix + "/chat/completions", headers, payload, "application/json");
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

      if (!res) {
        const auto err = res.error();
        const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                               ((err == httplib::Error::Read || err == httplib::Error::Write) && elapsed >= spec_.timeout);
        last = {timed_out ? ErrorCode::Timeout : ErrorCode::TransportError,
                spec_.base_url + ": " + httplib::to_string(err), true};
        continue;
      }
      if (res->status == 401 || res->status == 403)
        throw Error(ErrorCode::AuthError, spec_.base_url + " returned HTTP " + std::to_string(res->status));
      if (res->status == 408 || res->status == 429 || res->status >= 500) {
        last = {ErrorCode::TransportError, spec_.base_url + " returned HTTP " + std::to_string(res->status), true};
        continue;
      }
      if (res->status != 200)
        throw Error(ErrorCode::TransportError, spec_.base_url + " returned HTTP " + std::to_string(res->status));
      decode_reply(res->body, ex);
      return;
    }
    throw Error(last.code, last.message + " after " + std::to_string(spec_.max_retries + 1) + " attempt(s)");
  }

  static void decode_reply(const std::string& body, ChatExchange& ex) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error&) {
      throw Error(ErrorCode::MalformedEndpointReply, "reply is not JSON");
    }
    try {
      const auto& content = j.at("choices").at(0).at("message").at("content");
      ex.response_text = content.is_null() ? std::string() : content.get<std::string>();
      if (j.contains("usage") && j["usage"].is_object()) {
        const auto& u = j["usage"];
        ex.token_counts = TokenCounts{u.value("prompt_tokens", std::int64_t{0}), u.value("completion_tokens", std::int64_t{0})};
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedEndpointReply, std::string("unexpected reply shape: ") + e.what());
    }
  }

  void audit(const AssembledPrompt& prompt, const ChatExchange& ex) {
    if (spec_.audit_log.empty()) return;
    nlohmann::json line{{"request_id", ex.request_id},      {"model", spec_.model_name},
                        {"fingerprint", prompt.fingerprint}, {"system_text", ex.system_text},
                        {"user_text", ex.user_text},         {"response_text", ex.response_text},
                        {"latency", ex.latency}};
    std::lock_guard lock(audit_mu_);
    std::ofstream out(spec_.audit_log, std::ios::app);
    out << line.dump() << "\n";
  }

  EndpointSpec spec_;
  std::unique_ptr<detail::ConcurrencyLimiter> limiter_;
  std::atomic<std::uint64_t> next_id_{0};
  std::mutex audit_mu_;
};

inline ChatExchange complete(const EndpointSpec& endpoint, const AssembledPrompt& prompt) {
  Gateway gw(endpoint);
  return gw.complete(prompt);
}

/// Replay oracle: for the prompt built from instance i under `config`, answers
/// with instance i's response verbatim.
inline EndpointSpec scripted_from_dataset(const std::vector<Instance>& dataset, const PromptConfig& config = {}) {
  auto transcript = std::make_shared<Transcript>();
  for (const auto& in : dataset) {
    const auto prompt = build_prompt(in, config);
    auto [it, inserted] = transcript->responses.emplace(prompt.fingerprint, in.response);
    if (!inserted)
      throw Error(ErrorCode::DuplicatePromptFingerprint,
                  "instance '" + in.instance_id + "' builds the same prompt as an earlier instance");
  }
  EndpointSpec spec;
  spec.kind = EndpointKind::Scripted;
  spec.model_name = "replay";
  spec.transcript = std::move(transcript);
  return spec;
}

inline Transcript load_transcript(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidEndpoint, path + ": " + e.what());
  }
  Transcript t;
  const auto& responses = j.contains("responses") ? j["responses"] : j;
  if (!responses.is_object()) throw Error(ErrorCode::InvalidEndpoint, path + ": expected {fingerprint: response}");
  for (const auto& [fp, text] : responses.items()) {
    if (!text.is_string()) throw Error(ErrorCode::InvalidEndpoint, path + ": response for " + fp + " is not a string");
    t.responses.emplace(fp, text.get<std::string>());
  }
  return t;
}

/// Endpoint-config document mirroring EndpointSpec. Relative paths resolve
/// against `base_dir`. A scripted config may name a `transcript` file or a
/// `replay_dataset`, whose prompts are built with `replay_config`.
inline EndpointSpec endpoint_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                       const PromptConfig& replay_config = {}) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidEndpoint, "endpoint config must be an object");
  auto resolve = [&](const std::string& p) { return (base_dir / p).string(); };
  EndpointSpec spec;
  const std::string kind = j.value("kind", std::string("remote-chat"));
  if (kind == "remote-chat")
    spec.kind = EndpointKind::RemoteChat;
  else if (kind == "scripted")
    spec.kind = EndpointKind::Scripted;
  else
    throw Error(ErrorCode::InvalidEndpoint, "kind must be remote-chat or scripted, got '" + kind + "'");
  try {
    spec.base_url = j.value("base_url", std::string());
    spec.model_name = j.value("model_name", spec.kind == EndpointKind::Scripted ? std::string("scripted") : std::string());
    spec.timeout = j.value("timeout", spec.timeout);
    spec.max_retries = j.value("max_retries", spec.max_retries);
    spec.temperature = j.value("temperature", spec.temperature);
    spec.max_output_tokens = j.value("max_output_tokens", spec.max_output_tokens);
    spec.auth_token_env_var = j.value("auth_token_env_var", std::string());
    spec.max_concurrency = j.value("max_concurrency", spec.max_concurrency);
    spec.backoff_initial = j.value("backoff_initial", spec.backoff_initial);
    if (j.contains("audit_log")) spec.audit_log = resolve(j["audit_log"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidEndpoint, e.what());
  }
  if (spec.kind == EndpointKind::Scripted) {
    if (j.contains("replay_dataset")) {
      auto replay = scripted_from_dataset(load_dataset(resolve(j["replay_dataset"].get<std::string>())), replay_config);
      spec.transcript = replay.transcript;
    } else if (j.contains("transcript")) {
      spec.transcript = std::make_shared<Transcript>(load_transcript(resolve(j["transcript"].get<std::string>())));
    }
  }
  check_endpoint(spec);
  return spec;
}

inline EndpointSpec load_endpoint_config(const std::string& path, const PromptConfig& replay_config = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidEndpoint, path + ": " + e.what());
  }
  return endpoint_from_json(j, std::filesystem::path(path).parent_path(), replay_config);
}

}  // namespace ptzlm
