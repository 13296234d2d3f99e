#include <doctest.h>

#include <atomic>
#include <chrono>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "audit/error.hpp"
#include "audit/scorer_remote.hpp"

using namespace audit;

namespace {

// Stub endpoint speaking the documented wire protocol.
class StubServer {
 public:
  explicit StubServer(httplib::Server::Handler handler) {
    server_.Post("/score", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/score"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

NarrativePrompt sample_prompt() {
  NarrativePrompt prompt;
  prompt.clean = "High risk due to: feature f0 (+0.5000)";
  prompt.adversarial = "High risk due to: feature f1 (-0.2000)";
  prompt.instruction = "score consistency on [0,1]";
  return prompt;
}

RemoteScorerConfig config_for(const StubServer& server) {
  RemoteScorerConfig cfg;
  cfg.url = server.url();
  cfg.timeout_seconds = 2.0;
  cfg.max_retries = 1;
  return cfg;
}

}  // namespace

TEST_CASE("remote scorer round-trips the documented JSON protocol") {
  std::atomic<int> hits{0};
  nlohmann::json seen_body;
  std::string seen_auth;
  StubServer server([&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    seen_body = nlohmann::json::parse(req.body);
    auto it = req.headers.find("Authorization");
    seen_auth = it == req.headers.end() ? "" : it->second;
    res.set_content("{\"score\": 0.75}", "application/json");
  });

  RemoteScorerConfig cfg = config_for(server);
  cfg.token = "secret-token";
  RemoteScorer scorer(cfg);
  const NarrativePrompt prompt = sample_prompt();
  CHECK(consistency_score(prompt, scorer) == 0.75);
  CHECK(hits == 1);
  CHECK(seen_body.at("clean") == prompt.clean);
  CHECK(seen_body.at("adversarial") == prompt.adversarial);
  CHECK(seen_body.at("instruction") == prompt.instruction);
  CHECK(seen_auth == "Bearer secret-token");
}

TEST_CASE("out-of-range scores are rejected, never clamped") {
  StubServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"score\": 1.25}", "application/json");
  });
  RemoteScorer scorer(config_for(server));
  CHECK_THROWS_AS(scorer.score(sample_prompt()), ProtocolError);
}

TEST_CASE("malformed replies raise protocol errors without retries") {
  std::atomic<int> hits{0};

  SUBCASE("non-JSON body") {
    StubServer server([&](const httplib::Request&, httplib::Response& res) {
      ++hits;
      res.set_content("not json at all", "text/plain");
    });
    RemoteScorer scorer(config_for(server));
    CHECK_THROWS_AS(scorer.score(sample_prompt()), ProtocolError);
    CHECK(hits == 1);
  }
  SUBCASE("missing score field") {
    StubServer server([&](const httplib::Request&, httplib::Response& res) {
      ++hits;
      res.set_content("{\"verdict\": \"fine\"}", "application/json");
    });
    RemoteScorer scorer(config_for(server));
    CHECK_THROWS_AS(scorer.score(sample_prompt()), ProtocolError);
    CHECK(hits == 1);
  }
  SUBCASE("non-numeric score") {
    StubServer server([&](const httplib::Request&, httplib::Response& res) {
      ++hits;
      res.set_content("{\"score\": \"high\"}", "application/json");
    });
    RemoteScorer scorer(config_for(server));
    CHECK_THROWS_AS(scorer.score(sample_prompt()), ProtocolError);
    CHECK(hits == 1);
  }
}

TEST_CASE("server errors are retried, then succeed") {
  std::atomic<int> hits{0};
  StubServer server([&](const httplib::Request&, httplib::Response& res) {
    if (++hits == 1) {
      res.status = 503;
      res.set_content("busy", "text/plain");
    } else {
      res.set_content("{\"score\": 0.5}", "application/json");
    }
  });
  RemoteScorer scorer(config_for(server));
  CHECK(scorer.score(sample_prompt()) == 0.5);
  CHECK(hits == 2);
}

TEST_CASE("timeouts surface as transport errors after bounded retries") {
  std::atomic<int> hits{0};
  StubServer server([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    std::this_thread::sleep_for(std::chrono::milliseconds(700));
    res.set_content("{\"score\": 0.5}", "application/json");
  });
  RemoteScorerConfig cfg = config_for(server);
  cfg.timeout_seconds = 0.2;
  cfg.max_retries = 1;
  RemoteScorer scorer(cfg);
  CHECK_THROWS_AS(scorer.score(sample_prompt()), TransportError);
  CHECK(hits == 2);  // initial attempt + one retry
}

TEST_CASE("unreachable endpoints raise transport errors") {
  RemoteScorerConfig cfg;
  cfg.url = "http://127.0.0.1:1/score";  // nothing listens on port 1
  cfg.timeout_seconds = 0.3;
  cfg.max_retries = 0;
  RemoteScorer scorer(cfg);
  CHECK_THROWS_AS(scorer.score(sample_prompt()), TransportError);
}

TEST_CASE("scorer URL validation") {
  RemoteScorerConfig cfg;
  cfg.url = "ftp://example.com/score";
  CHECK_THROWS_AS(RemoteScorer{cfg}, ConfigError);
  cfg.url = "http://";
  CHECK_THROWS_AS(RemoteScorer{cfg}, ConfigError);
}
