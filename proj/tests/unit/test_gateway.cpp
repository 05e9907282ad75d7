#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "fixtures.hpp"
#include "ptzlm/gateway.hpp"
#include "test_support.hpp"

namespace ptzlm {
namespace {

/// Chat-completions stand-in on an ephemeral local port.
class StubServer {
 public:
  explicit StubServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

std::string reply_with(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}},
                        {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 3}}}}
      .dump();
}

EndpointSpec remote(const std::string& url) {
  EndpointSpec spec;
  spec.kind = EndpointKind::RemoteChat;
  spec.base_url = url;
  spec.model_name = "stub";
  spec.timeout = 5.0;
  spec.backoff_initial = 0.01;
  return spec;
}

AssembledPrompt prompt(const std::string& user = "hello") { return make_prompt("system", user, 0); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::Io;
}

TEST(Gateway, ScriptedPlayback) {
  auto t = std::make_shared<Transcript>();
  const auto p = prompt();
  t->responses[p.fingerprint] = "zoom(2.0)";
  EndpointSpec spec;
  spec.transcript = t;
  EXPECT_EQ(complete(spec, p).response_text, "zoom(2.0)");
  EXPECT_EQ(code_of([&] { complete(spec, prompt("other")); }), ErrorCode::MalformedEndpointReply);
}

TEST(Gateway, RemoteRequestShapeAndAuth) {
  nlohmann::json seen;
  std::string auth;
  StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(reply_with("pan_left(2)"), "application/json");
  });
  ::setenv("PTZLM_TEST_TOKEN", "sekrit", 1);
  auto spec = remote(stub.url());
  spec.auth_token_env_var = "PTZLM_TEST_TOKEN";
  const auto ex = complete(spec, prompt("find the car"));
  EXPECT_EQ(ex.response_text, "pan_left(2)");
  ASSERT_TRUE(ex.token_counts.has_value());
  EXPECT_EQ(ex.token_counts->input, 11);
  EXPECT_EQ(auth, "Bearer sekrit");
  EXPECT_EQ(seen["model"], "stub");
  EXPECT_EQ(seen["temperature"], 0.0);
  EXPECT_EQ(seen["messages"][0]["role"], "system");
  EXPECT_EQ(seen["messages"][1]["content"], "find the car");
}

TEST(Gateway, RetriesTransientFailures) {
  std::atomic<int> hits{0};
  StubServer stub([&](const httplib::Request&, httplib::Response& res) {
    if (++hits < 3) {
      res.status = 503;
      return;
    }
    res.set_content(reply_with("home()"), "application/json");
  });
  auto spec = remote(stub.url());
  spec.max_retries = 2;
  EXPECT_EQ(complete(spec, prompt()).response_text, "home()");
  EXPECT_EQ(hits.load(), 3);

  hits = -10;
  spec.max_retries = 1;
  EXPECT_EQ(code_of([&] { complete(spec, prompt()); }), ErrorCode::TransportError);
  EXPECT_EQ(hits.load(), -8);
}

TEST(Gateway, AuthErrorIsNotRetried) {
  std::atomic<int> hits{0};
  StubServer stub([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 401;
  });
  auto spec = remote(stub.url());
  spec.max_retries = 3;
  EXPECT_EQ(code_of([&] { complete(spec, prompt()); }), ErrorCode::AuthError);
  EXPECT_EQ(hits.load(), 1);
}

TEST(Gateway, MalformedReplyIsNotRetried) {
  std::atomic<int> hits{0};
  StubServer stub([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.set_content(hits == 1 ? "not json" : "{\"choices\": []}", "application/json");
  });
  auto spec = remote(stub.url());
  EXPECT_EQ(code_of([&] { complete(spec, prompt()); }), ErrorCode::MalformedEndpointReply);
  EXPECT_EQ(code_of([&] { complete(spec, prompt()); }), ErrorCode::MalformedEndpointReply);
  EXPECT_EQ(hits.load(), 2);
}

TEST(Gateway, SlowServerTimesOut) {
  StubServer stub([&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content(reply_with("home()"), "application/json");
  });
  auto spec = remote(stub.url());
  spec.timeout = 0.1;
  spec.max_retries = 0;
  EXPECT_EQ(code_of([&] { complete(spec, prompt()); }), ErrorCode::Timeout);
}

TEST(Gateway, UnreachableIsTransportError) {
  auto spec = remote("http://127.0.0.1:1");
  spec.max_retries = 1;
  EXPECT_EQ(code_of([&] { complete(spec, prompt()); }), ErrorCode::TransportError);
}

TEST(Gateway, ConcurrencyCapAndCorrelation) {
  std::atomic<int> in_flight{0}, peak{0};
  StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
    const int now = ++in_flight;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(80));
    --in_flight;
    const auto body = nlohmann::json::parse(req.body);
    res.set_content(reply_with("echo:" + body["messages"][1]["content"].get<std::string>()), "application/json");
  });
  auto spec = remote(stub.url());
  spec.max_concurrency = 2;
  Gateway gw(spec);
  std::vector<std::string> got(8);
  {
    std::vector<std::jthread> threads;
    for (std::size_t i = 0; i < got.size(); ++i)
      threads.emplace_back([&, i] { got[i] = gw.complete(prompt("q" + std::to_string(i))).response_text; });
  }
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i], "echo:q" + std::to_string(i));
  EXPECT_LE(peak.load(), 2);
}

TEST(Gateway, AuditLog) {
  testing::TempDir dir;
  auto t = std::make_shared<Transcript>();
  t->responder = [](const AssembledPrompt&) { return std::optional<std::string>("hold(1)"); };
  EndpointSpec spec;
  spec.transcript = t;
  spec.audit_log = dir.file("audit.jsonl");
  Gateway gw(spec);
  gw.complete(prompt("a"));
  gw.complete(prompt("b"));
  const auto text = read_text_file(spec.audit_log);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_EQ(nlohmann::json::parse(text.substr(0, text.find('\n')))["user_text"], "a");
}

TEST(Gateway, InvalidSpecs) {
  EndpointSpec spec;
  EXPECT_EQ(code_of([&] { Gateway g(spec); }), ErrorCode::InvalidEndpoint);
  spec = remote("");
  EXPECT_EQ(code_of([&] { Gateway g(spec); }), ErrorCode::InvalidEndpoint);
  spec = remote("http://x");
  spec.timeout = 0;
  EXPECT_EQ(code_of([&] { Gateway g(spec); }), ErrorCode::InvalidEndpoint);
}

TEST(ScriptedFromDataset, ReplaysEachInstance) {
  const auto data = fixtures::expert_set();
  Gateway gw(scripted_from_dataset(data));
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(gw.complete(build_prompt(data[i], {})).response_text, data[i].response);
}

TEST(ScriptedFromDataset, DuplicateFingerprint) {
  auto data = fixtures::expert_set();
  data.resize(3);
  data.push_back(data[1]);
  data.back().instance_id = "dup";
  EXPECT_EQ(code_of([&] { scripted_from_dataset(data); }), ErrorCode::DuplicatePromptFingerprint);
}

TEST(EndpointConfig, ShippedReplayConfigLoads) {
  const auto spec = load_endpoint_config(testing::data_path("endpoints/replay.json"));
  EXPECT_EQ(spec.kind, EndpointKind::Scripted);
  ASSERT_TRUE(spec.transcript);
  EXPECT_EQ(spec.transcript->responses.size(), 100u);
  EXPECT_EQ(code_of([] { endpoint_from_json({{"kind", "carrier-pigeon"}}, "."); }), ErrorCode::InvalidEndpoint);
}

}  // namespace
}  // namespace ptzlm
