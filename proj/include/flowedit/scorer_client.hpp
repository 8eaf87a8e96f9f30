#pragma once

#include <chrono>
#include <string>

#include "flowedit/reward.hpp"
#include "flowedit/socket.hpp"

namespace flowedit {

struct RemoteScorerOptions {
  Endpoint endpoint;
  std::chrono::milliseconds timeout{2000};
  int attempts = 3;
};

// One request line out, one response line back. Timeouts and dropped
// connections are retried on a fresh connection up to `attempts` times in
// total; malformed or out-of-range replies fail immediately. Not thread-safe:
// give each worker its own instance.
class RemoteScorer final : public Scorer {
 public:
  explicit RemoteScorer(RemoteScorerOptions options) : options_(std::move(options)) {}

  RewardScore score(Point edited, const EditInstance& inst) override;
  RewardScore score(Point edited, Point source, int code);

  int attempts_made() const noexcept { return last_attempts_; }

 private:
  RemoteScorerOptions options_;
  Socket socket_;
  int last_attempts_ = 0;
};

}  // namespace flowedit
