#include "flowedit/mock_scorer.hpp"

#include <sys/socket.h>

#include "flowedit/error.hpp"
#include "flowedit/reward.hpp"
#include "flowedit/scorer_protocol.hpp"

namespace flowedit {

ScorerFault parse_fault(std::string_view name) {
  if (name == "none") return ScorerFault::none;
  if (name == "out-of-range") return ScorerFault::out_of_range;
  if (name == "malformed") return ScorerFault::malformed;
  if (name == "silent") return ScorerFault::silent;
  if (name == "drop") return ScorerFault::drop;
  fail(ErrorCode::invalid_argument, "unknown scorer fault '" + std::string(name) + "'");
}

MockScorer::MockScorer(MockScorerOptions options) : options_(std::move(options)) {}

MockScorer::~MockScorer() { stop(); }

void MockScorer::start() {
  listener_ = listen_tcp(options_.listen);
  acceptor_ = std::thread([this] { accept_loop(); });
}

void MockScorer::wait() {
  if (acceptor_.joinable()) acceptor_.join();
}

void MockScorer::stop() {
  if (stopping_.exchange(true)) return;
  listener_.shutdown();
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    for (auto& c : connections_) c->shutdown();
    workers.swap(workers_);
  }
  for (auto& w : workers) w.join();
  listener_.close();
}

void MockScorer::accept_loop() {
  while (!stopping_) {
    const int fd = ::accept(listener_.fd(), nullptr, nullptr);
    if (fd < 0) {
      if (stopping_) break;
      continue;
    }
    auto conn = std::make_shared<Socket>(fd);
    std::lock_guard lock(mu_);
    if (stopping_) break;
    connections_.push_back(conn);
    workers_.emplace_back([this, conn] { serve_connection(conn); });
  }
}

void MockScorer::serve_connection(std::shared_ptr<Socket> conn) {
  try {
    while (!stopping_) {
      const std::string line = conn->read_line(std::chrono::hours(24));
      std::string reply;
      switch (options_.fault) {
        case ScorerFault::none:
          try {
            const ScoreRequest req = decode_request(line);
            reply = encode_response(analytic_score(req.edited, req.source, req.code));
          } catch (const Error& e) {
            reply = std::string("{\"error\":\"") + (e.code() == ErrorCode::protocol ? "bad request" : "internal") + "\"}\n";
          }
          break;
        case ScorerFault::out_of_range:
          reply = "{\"alignment\":7.0,\"coherence\":1.0,\"consistency\":1.0}\n";
          break;
        case ScorerFault::malformed:
          reply = "alignment=1 coherence=1\n";
          break;
        case ScorerFault::silent:
          continue;
        case ScorerFault::drop:
          conn->shutdown();
          return;
      }
      ++served_;
      conn->send_all(reply);
    }
  } catch (const Error&) {
    // Peer went away or the server is stopping.
  }
}

}  // namespace flowedit
