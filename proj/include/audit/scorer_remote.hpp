#pragma once

#include <string>

#include "audit/semantic.hpp"

namespace audit {

struct RemoteScorerConfig {
  std::string url;    // http://host[:port][/path]
  std::string token;  // optional; sent as a Bearer authorization header
  double timeout_seconds = 5.0;
  int max_retries = 2;  // extra attempts after the first
};

// HTTP NarrativeScorer. POSTs {"clean", "adversarial", "instruction"} as
// JSON and expects {"score": number in [0,1]}. Connection failures,
// timeouts and 5xx replies are retried up to max_retries, then raise
// TransportError; malformed 200 replies raise ProtocolError immediately.
class RemoteScorer : public NarrativeScorer {
 public:
  explicit RemoteScorer(RemoteScorerConfig config);

  double score(const NarrativePrompt& prompt) override;

 private:
  RemoteScorerConfig config_;
  std::string host_;
  int port_ = 80;
  std::string path_;
};

}  // namespace audit
