#include "flowedit/socket.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "flowedit/error.hpp"

namespace flowedit {

namespace {

sockaddr_in make_address(const Endpoint& endpoint) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(endpoint.port);
  require(inet_pton(AF_INET, endpoint.host.c_str(), &addr.sin_addr) == 1, ErrorCode::invalid_argument,
          "invalid IPv4 address '" + endpoint.host + "'");
  return addr;
}

std::string errno_text() { return std::strerror(errno); }

}  // namespace

Endpoint parse_endpoint(std::string_view text) {
  Endpoint ep;
  std::string_view port_text = text;
  if (auto colon = text.rfind(':'); colon != std::string_view::npos) {
    ep.host = std::string(text.substr(0, colon));
    port_text = text.substr(colon + 1);
  }
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
  require(ec == std::errc() && ptr == port_text.data() + port_text.size() && value <= 65535,
          ErrorCode::invalid_argument, "invalid endpoint '" + std::string(text) + "'");
  ep.port = static_cast<std::uint16_t>(value);
  return ep;
}

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.release();
    pending_ = std::move(other.pending_);
  }
  return *this;
}

int Socket::release() noexcept {
  const int fd = fd_;
  fd_ = -1;
  return fd;
}

void Socket::close() noexcept {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
  pending_.clear();
}

void Socket::shutdown() noexcept {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::send_all(std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    require(n > 0, ErrorCode::connection, "send failed: " + errno_text());
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::string Socket::read_line(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (auto nl = pending_.find('\n'); nl != std::string::npos) {
      std::string line = pending_.substr(0, nl);
      pending_.erase(0, nl + 1);
      return line;
    }
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    require(remaining.count() > 0, ErrorCode::timeout, "timed out waiting for a reply");
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (ready < 0 && errno == EINTR) continue;
    require(ready >= 0, ErrorCode::connection, "poll failed: " + errno_text());
    require(ready > 0, ErrorCode::timeout, "timed out waiting for a reply");
    char buf[4096];
    const ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
    if (n < 0 && errno == EINTR) continue;
    require(n > 0, ErrorCode::connection, n == 0 ? "connection closed by peer" : "recv failed: " + errno_text());
    pending_.append(buf, static_cast<std::size_t>(n));
  }
}

Socket connect_tcp(const Endpoint& endpoint, std::chrono::milliseconds timeout) {
  const sockaddr_in addr = make_address(endpoint);
  Socket sock(::socket(AF_INET, SOCK_STREAM, 0));
  require(sock.valid(), ErrorCode::connection, "socket() failed: " + errno_text());
  const int flags = ::fcntl(sock.fd(), F_GETFL, 0);
  ::fcntl(sock.fd(), F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(sock.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr));
  if (rc < 0 && errno == EINPROGRESS) {
    pollfd pfd{sock.fd(), POLLOUT, 0};
    rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    require(rc > 0, ErrorCode::timeout, "connect to " + endpoint.str() + " timed out");
    int err = 0;
    socklen_t len = sizeof(err);
    ::getsockopt(sock.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
    require(err == 0, ErrorCode::connection, "connect to " + endpoint.str() + " failed: " + std::strerror(err));
  } else {
    require(rc == 0, ErrorCode::connection, "connect to " + endpoint.str() + " failed: " + errno_text());
  }
  ::fcntl(sock.fd(), F_SETFL, flags);
  int one = 1;
  ::setsockopt(sock.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return sock;
}

Socket listen_tcp(Endpoint& endpoint) {
  const sockaddr_in addr = make_address(endpoint);
  Socket sock(::socket(AF_INET, SOCK_STREAM, 0));
  require(sock.valid(), ErrorCode::connection, "socket() failed: " + errno_text());
  int one = 1;
  ::setsockopt(sock.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  require(::bind(sock.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0, ErrorCode::connection,
          "bind to " + endpoint.str() + " failed: " + errno_text());
  require(::listen(sock.fd(), 64) == 0, ErrorCode::connection, "listen failed: " + errno_text());
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(sock.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
  endpoint.port = ntohs(bound.sin_port);
  return sock;
}

}  // namespace flowedit
