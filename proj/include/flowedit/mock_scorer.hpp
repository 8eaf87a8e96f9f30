#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "flowedit/socket.hpp"

namespace flowedit {

// Misbehaviours used to exercise client error handling.
enum class ScorerFault {
  none,
  out_of_range,  // replies with alignment = 7
  malformed,     // replies with a line that is not JSON
  silent,        // reads requests, never replies
  drop,          // closes the connection after reading a request
};

ScorerFault parse_fault(std::string_view name);

struct MockScorerOptions {
  Endpoint listen{"127.0.0.1", 0};
  std::uint64_t seed = 0;
  ScorerFault fault = ScorerFault::none;
};

// Serves the scorer protocol from analytic_score. One thread per connection.
class MockScorer {
 public:
  explicit MockScorer(MockScorerOptions options);
  ~MockScorer();
  MockScorer(const MockScorer&) = delete;
  MockScorer& operator=(const MockScorer&) = delete;

  // Binds and starts accepting in the background.
  void start();
  // Blocks until stop() is called from another thread.
  void wait();
  void stop();

  const Endpoint& endpoint() const noexcept { return options_.listen; }
  std::uint64_t requests_served() const noexcept { return served_.load(); }

 private:
  void accept_loop();
  void serve_connection(std::shared_ptr<Socket> conn);

  MockScorerOptions options_;
  Socket listener_;
  std::thread acceptor_;
  std::mutex mu_;
  std::vector<std::thread> workers_;
  std::vector<std::shared_ptr<Socket>> connections_;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> served_{0};
};

}  // namespace flowedit
