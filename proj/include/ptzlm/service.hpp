#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ptzlm/camera_state.hpp"
#include "ptzlm/error.hpp"
#include "ptzlm/gateway.hpp"
#include "ptzlm/parser.hpp"
#include "ptzlm/prompt.hpp"
#include "ptzlm/scene.hpp"
#include "ptzlm/simulator.hpp"

namespace ptzlm {

struct TranscriptEntry {
  std::string request;
  std::string raw_response;
  bool raw_mode = false;
  bool accepted = false;
  CommandSequence commands;
  std::vector<Diagnostic> diagnostics;
  std::optional<std::pair<std::int64_t, std::int64_t>> frame_span;  // session-wide frame indices
};

struct Session {
  std::string session_id;
  Scene scene;
  CameraState state;
  std::vector<TranscriptEntry> transcript;
  std::int64_t frames_emitted = 0;
  std::string created_at;
  std::string updated_at;
};

inline void to_json(nlohmann::json& j, const TranscriptEntry& e) {
  std::vector<std::string> commands;
  for (const auto& c : e.commands) commands.push_back(to_string(c));
  j = nlohmann::json{{"request", e.request},   {"raw_response", e.raw_response}, {"raw_mode", e.raw_mode},
                     {"accepted", e.accepted}, {"commands", commands},         {"diagnostics", e.diagnostics}};
  j["frame_span"] = e.frame_span ? nlohmann::json::array({e.frame_span->first, e.frame_span->second}) : nlohmann::json();
}

inline void to_json(nlohmann::json& j, const Session& s) {
  j = nlohmann::json{{"session_id", s.session_id}, {"scene", s.scene},           {"state", s.state},
                     {"viewport", viewport_of(s.state)}, {"transcript", s.transcript}, {"created_at", s.created_at},
                     {"updated_at", s.updated_at}};
}

struct ServiceConfig {
  std::optional<EndpointSpec> endpoint;  // default model endpoint
  PromptConfig prompt;
  int default_object_count = 5;
  std::string transcript_log;  // JSONL; empty disables persistence
};

/// HTTP surface behind the interactive console. Sessions live in memory; a
/// session is handled by one request at a time, distinct sessions in parallel.
class Service {
 public:
  explicit Service(ServiceConfig config) : config_(std::move(config)) {
    if (config_.endpoint) default_gateway_ = std::make_shared<Gateway>(*config_.endpoint);
  }

  void register_routes(httplib::Server& server) {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.Get("/scenes", [this](const httplib::Request&, httplib::Response& res) { list_scenes(res); });
    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) { create_session(req, res); });
    server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      get_session(req.matches[1], res);
    });
    server.Delete(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      delete_session(req.matches[1], res);
    });
    server.Post(R"(/sessions/([^/]+)/request)", [this](const httplib::Request& req, httplib::Response& res) {
      post_request(req.matches[1], req, res);
    });
  }

 private:
  struct Slot {
    std::mutex mu;
    Session session;
  };

  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void fail(httplib::Response& res, int status, std::string_view error, const std::string& message,
                   nlohmann::json extra = nlohmann::json::object()) {
    extra["error"] = error;
    extra["message"] = message;
    reply(res, status, extra);
  }

  static std::string now_iso() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  std::shared_ptr<Slot> find(const std::string& id) {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  void list_scenes(httplib::Response& res) {
    nlohmann::json envs = nlohmann::json::array();
    for (const auto& e : environment_catalog())
      envs.push_back({{"environment", e.environment}, {"labels", e.labels}, {"attributes", e.attributes}});
    reply(res, 200, {{"environments", envs}});
  }

  void create_session(const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body.empty() ? "{}" : req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) return fail(res, 400, "BadRequest", "body must be a JSON object");
    try {
      const auto environment = body.value("environment", std::string("construction"));
      const auto seed = body.value("seed", std::uint64_t{0});
      const auto count = body.value("object_count", config_.default_object_count);
      auto slot = std::make_shared<Slot>();
      slot->session.scene = generate_scene(environment, seed, count);
      slot->session.state = kHomeState;
      slot->session.created_at = slot->session.updated_at = now_iso();
      {
        std::lock_guard lock(mu_);
        slot->session.session_id = "s" + std::to_string(++session_counter_);
        sessions_[slot->session.session_id] = slot;
      }
      const auto& s = slot->session;
      reply(res, 201,
            {{"session_id", s.session_id}, {"state", s.state}, {"scene", s.scene}, {"viewport", viewport_of(s.state)}});
    } catch (const Error& e) {
      fail(res, 400, to_string(e.code()), e.what());
    } catch (const nlohmann::json::exception& e) {
      fail(res, 400, "BadRequest", e.what());
    }
  }

  void get_session(const std::string& id, httplib::Response& res) {
    auto slot = find(id);
    if (!slot) return fail(res, 404, "UnknownSession", "no session '" + id + "'");
    std::lock_guard lock(slot->mu);
    reply(res, 200, slot->session);
  }

  void delete_session(const std::string& id, httplib::Response& res) {
    std::lock_guard lock(mu_);
    if (sessions_.erase(id) == 0) return fail(res, 404, "UnknownSession", "no session '" + id + "'");
    reply(res, 200, {{"deleted", id}});
  }

  void post_request(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    auto slot = find(id);
    if (!slot) return fail(res, 404, "UnknownSession", "no session '" + id + "'");
    auto body = nlohmann::json::parse(req.body.empty() ? "{}" : req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) return fail(res, 400, "BadRequest", "body must be a JSON object");
    const std::string text = body.value("text", std::string());
    if (detail::trim(text).empty()) return fail(res, 400, "EmptyRequest", "text is empty");
    const bool raw_mode = body.value("raw", false);

    std::lock_guard lock(slot->mu);
    Session& s = slot->session;
    TranscriptEntry entry;
    entry.request = text;
    entry.raw_mode = raw_mode;
    if (raw_mode) {
      entry.raw_response = text;
    } else {
      try {
        std::shared_ptr<Gateway> gateway = default_gateway_;
        if (body.contains("endpoint")) gateway = std::make_shared<Gateway>(endpoint_from_json(body["endpoint"], "."));
        if (!gateway) return fail(res, 400, "NoEndpoint", "service has no model endpoint; use raw mode or pass one");
        entry.raw_response = gateway->complete(build_prompt(s.scene, s.state, text, config_.prompt)).response_text;
      } catch (const Error& e) {
        const int status = e.code() == ErrorCode::InvalidEndpoint ? 400 : 502;
        return fail(res, status, to_string(e.code()), e.what());
      }
    }

    auto outcome = parse_response(entry.raw_response, s.scene);
    entry.accepted = outcome.accepted;
    entry.diagnostics = outcome.diagnostics;
    entry.commands = outcome.commands;
    s.updated_at = now_iso();
    if (!outcome.accepted) {
      entry.commands.clear();
      nlohmann::json extra{{"raw_response", entry.raw_response}, {"diagnostics", outcome.diagnostics}};
      append(s, std::move(entry));
      return fail(res, 400, "ValidationFailure", "response did not validate", extra);
    }

    auto sim = simulate(s.scene, s.state, outcome.commands);
    entry.frame_span = std::make_pair(s.frames_emitted + 1, s.frames_emitted + static_cast<std::int64_t>(sim.frames.size()));
    s.frames_emitted += static_cast<std::int64_t>(sim.frames.size());
    s.state = sim.final_state;
    std::vector<std::string> commands;
    for (const auto& c : outcome.commands) commands.push_back(to_string(c));
    nlohmann::json out{{"raw_response", entry.raw_response},
                       {"commands", commands},
                       {"frames", sim.frames},
                       {"state", s.state},
                       {"viewport", viewport_of(s.state)},
                       {"observations", describe_observations(s.scene, s.state)}};
    append(s, std::move(entry));
    reply(res, 200, out);
  }

  void append(Session& s, TranscriptEntry entry) {
    if (!config_.transcript_log.empty()) {
      nlohmann::json line = entry;
      line["session_id"] = s.session_id;
      std::lock_guard lock(log_mu_);
      std::ofstream(config_.transcript_log, std::ios::app) << line.dump() << "\n";
    }
    s.transcript.push_back(std::move(entry));
  }

  ServiceConfig config_;
  std::shared_ptr<Gateway> default_gateway_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::uint64_t session_counter_ = 0;
  std::mutex log_mu_;
};

/// Blocks serving on `port` until the process is stopped.
inline bool serve(int port, ServiceConfig config, const std::string& host = "0.0.0.0") {
  Service service(std::move(config));
  httplib::Server server;
  service.register_routes(server);
  return server.listen(host, port);
}

}  // namespace ptzlm
