#include "audit/scorer_remote.hpp"

#include <cmath>

#include <httplib.h>
#include <json.hpp>

#include "audit/error.hpp"

namespace audit {

namespace {

void parse_url(const std::string& url, std::string& host, int& port, std::string& path) {
  const std::string prefix = "http://";
  if (url.rfind(prefix, 0) != 0) {
    throw ConfigError("scorer URL must start with http:// (got '" + url + "')");
  }
  std::string rest = url.substr(prefix.size());
  const std::size_t slash = rest.find('/');
  path = slash == std::string::npos ? "/" : rest.substr(slash);
  std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
  const std::size_t colon = authority.find(':');
  if (colon == std::string::npos) {
    host = authority;
    port = 80;
  } else {
    host = authority.substr(0, colon);
    port = std::stoi(authority.substr(colon + 1));
  }
  if (host.empty()) throw ConfigError("scorer URL has no host");
}

}  // namespace

RemoteScorer::RemoteScorer(RemoteScorerConfig config) : config_(std::move(config)) {
  if (config_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (!(config_.timeout_seconds > 0.0)) throw ConfigError("timeout must be > 0");
  parse_url(config_.url, host_, port_, path_);
}

double RemoteScorer::score(const NarrativePrompt& prompt) {
  nlohmann::json body = {{"clean", prompt.clean},
                         {"adversarial", prompt.adversarial},
                         {"instruction", prompt.instruction}};
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!config_.token.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.token);
  }

  const auto timeout_sec = static_cast<time_t>(config_.timeout_seconds);
  const auto timeout_usec = static_cast<time_t>(
      (config_.timeout_seconds - static_cast<double>(timeout_sec)) * 1e6);
  std::string last_failure = "no attempt made";
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    httplib::Client client(host_, port_);
    client.set_connection_timeout(timeout_sec, timeout_usec);
    client.set_read_timeout(timeout_sec, timeout_usec);
    client.set_write_timeout(timeout_sec, timeout_usec);

    httplib::Result res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_failure = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_failure = "server error status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw ProtocolError("scorer replied with status " + std::to_string(res->status));
    }
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception&) {
      throw ProtocolError("scorer reply is not valid JSON");
    }
    if (!reply.is_object() || !reply.contains("score") ||
        !reply["score"].is_number()) {
      throw ProtocolError("scorer reply lacks a numeric 'score' field");
    }
    const double value = reply["score"].get<double>();
    if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
      throw ProtocolError("scorer score outside [0, 1]: " + std::to_string(value));
    }
    return value;
  }
  throw TransportError("scorer unreachable after " +
                       std::to_string(config_.max_retries + 1) + " attempts (" +
                       last_failure + ")");
}

}  // namespace audit
