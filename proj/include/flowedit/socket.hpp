#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace flowedit {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::string str() const { return host + ":" + std::to_string(port); }
};

// "host:port"; a bare port means 127.0.0.1.
Endpoint parse_endpoint(std::string_view text);

// Owning POSIX stream socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  int release() noexcept;
  void close() noexcept;
  // Unblocks any thread waiting on this socket.
  void shutdown() noexcept;

  void send_all(std::string_view data);
  // Reads through the next '\n' (excluded from the result). Throws
  // ErrorCode::timeout when nothing arrives within `timeout` and
  // ErrorCode::connection when the peer closes first.
  std::string read_line(std::chrono::milliseconds timeout);

 private:
  int fd_ = -1;
  std::string pending_;
};

Socket connect_tcp(const Endpoint& endpoint, std::chrono::milliseconds timeout);
// Binds and listens; the bound port (useful with port 0) is written back.
Socket listen_tcp(Endpoint& endpoint);

}  // namespace flowedit
