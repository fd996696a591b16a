// Copyright 2026 The hgdagger Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "hgdagger/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <stdexcept>
#include <utility>

#include "hgdagger/errors.hpp"
#include "hgdagger/protocol.hpp"

namespace hgdagger::session
{

namespace
{

constexpr std::size_t kMaxLine = 1 << 16;

std::runtime_error socket_error(const std::string & what)
{
  return std::runtime_error(what + ": " + std::strerror(errno));
}

bool send_all(int fd, const std::string & line)
{
  std::string framed = line;
  framed.push_back('\n');
  std::size_t sent = 0;
  while (sent < framed.size()) {
    const ssize_t n = ::send(fd, framed.data() + sent, framed.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) {
        continue;
      }
      return false;
    }
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

// Reads newline-framed lines from a socket. Returns nullopt on end of stream,
// error, overlong line, or timeout.
class LineReader
{
public:
  explicit LineReader(int fd) : fd_(fd) {}

  std::optional<std::string> next(int timeout_ms)
  {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    for (;;) {
      const auto newline = buffer_.find('\n');
      if (newline != std::string::npos) {
        std::string line = buffer_.substr(0, newline);
        buffer_.erase(0, newline + 1);
        if (!line.empty() && line.back() == '\r') {
          line.pop_back();
        }
        return line;
      }
      if (buffer_.size() > kMaxLine) {
        return std::nullopt;
      }
      int wait = -1;
      if (timeout_ms >= 0) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
          return std::nullopt;
        }
        wait = static_cast<int>(left.count());
      }
      pollfd pfd{fd_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, wait);
      if (ready < 0 && errno == EINTR) {
        continue;
      }
      if (ready <= 0) {
        return std::nullopt;
      }
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (n <= 0) {
        return std::nullopt;
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

private:
  int fd_;
  std::string buffer_;
};

}  // namespace

SessionServer::SessionServer(
  ServerConfig config, CheckpointResolver resolver, SessionObserver observer)
: config_(std::move(config)), resolver_(std::move(resolver)), observer_(std::move(observer))
{
}

SessionServer::~SessionServer() { stop(); }

void SessionServer::start()
{
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) {
    throw socket_error("socket");
  }
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(config_.port);
  if (::inet_pton(AF_INET, config_.host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::invalid_argument("bad listen address '" + config_.host + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) < 0) {
    const auto error = socket_error("bind");
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw error;
  }
  if (::listen(listen_fd_, 16) < 0) {
    throw socket_error("listen");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr *>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  stopping_ = false;
  acceptor_ = std::thread([this] { accept_loop(); });
  spdlog::info("session server listening on {}:{}", config_.host, port_);
}

void SessionServer::stop()
{
  if (stopping_.exchange(true)) {
    return;
  }
  if (acceptor_.joinable()) {
    acceptor_.join();
  }
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(connections_mutex_);
    for (int fd : connection_fds_) {
      ::shutdown(fd, SHUT_RDWR);
    }
    threads = std::move(connections_);
  }
  for (auto & t : threads) {
    t.join();
  }
}

void SessionServer::accept_loop()
{
  while (!stopping_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    if (::poll(&pfd, 1, 50) <= 0) {
      continue;
    }
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      continue;
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard lock(connections_mutex_);
    connection_fds_.push_back(fd);
    connections_.emplace_back([this, fd] { serve(fd); });
  }
}

void SessionServer::serve(int fd)
{
  auto finish = [&]() {
    std::lock_guard lock(connections_mutex_);
    std::erase(connection_fds_, fd);
    ::shutdown(fd, SHUT_RDWR);
    ::close(fd);
  };

  LineReader reader(fd);
  std::optional<std::string> first;
  while (!stopping_ && !first) {
    first = reader.next(100);
    if (!first) {
      pollfd pfd{fd, POLLIN, 0};
      if (::poll(&pfd, 1, 0) > 0 && (pfd.revents & (POLLHUP | POLLERR)) != 0) {
        break;
      }
    }
  }
  if (!first) {
    finish();
    return;
  }

  wire::StartRequest request;
  std::string session_id;
  std::shared_ptr<Session> session;
  try {
    request = wire::decode_start(wire::parse_message(*first));
    if (request.rate_hz > config_.max_rate_hz) {
      throw FormatError("rate_hz exceeds the server limit");
    }
  } catch (const std::exception & e) {
    send_all(fd, wire::encode_error("protocol-error", e.what()));
    finish();
    return;
  }
  try {
    const CheckpointEntry entry = resolver_(request.checkpoint_id);
    if (!entry.policy) {
      throw SessionRejected("checkpoint '" + request.checkpoint_id + "' has no policy");
    }
    session_id = registry_.create(request.scenario_seed, entry.policy, entry.tau, entry.options);
    session = registry_.get(session_id);
  } catch (const std::exception & e) {
    spdlog::warn("rejected session for checkpoint '{}': {}", request.checkpoint_id, e.what());
    send_all(fd, wire::encode_error("session-rejected", e.what()));
    finish();
    return;
  }

  // Client events are read concurrently and handed to the session loop in
  // arrival order.
  std::mutex inbox_mutex;
  std::deque<std::string> inbox;
  std::atomic<bool> disconnected{false};
  std::thread receiver([&] {
    while (!stopping_ && !disconnected) {
      auto line = reader.next(100);
      if (line) {
        std::lock_guard lock(inbox_mutex);
        inbox.push_back(std::move(*line));
        continue;
      }
      pollfd pfd{fd, POLLIN, 0};
      if (::poll(&pfd, 1, 0) != 0) {
        char probe;
        if (::recv(fd, &probe, 1, MSG_PEEK | MSG_DONTWAIT) <= 0) {
          disconnected = true;
        }
      }
    }
  });

  const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
    std::chrono::duration<double>(1.0 / request.rate_hz));
  auto next = std::chrono::steady_clock::now();
  bool alive = send_all(fd, wire::encode_snapshot(session->state(), &session->scenario()));
  while (alive && !stopping_ && !disconnected && session->state().phase != Phase::finished) {
    next += period;
    std::this_thread::sleep_until(next);
    std::deque<std::string> batch;
    {
      std::lock_guard lock(inbox_mutex);
      batch.swap(inbox);
    }
    std::vector<std::string> errors;
    for (const auto & line : batch) {
      try {
        session->handle_event(wire::decode_event(wire::parse_message(line)));
      } catch (const std::exception & e) {
        errors.push_back(wire::encode_error("protocol-error", e.what()));
      }
    }
    std::vector<std::string> warnings = session->state().warnings;
    session->tick();
    SessionState snapshot = session->state();
    snapshot.warnings.insert(snapshot.warnings.begin(), warnings.begin(), warnings.end());
    for (const auto & error : errors) {
      alive = alive && send_all(fd, error);
    }
    alive = alive && send_all(fd, wire::encode_snapshot(snapshot));
  }
  const bool finished = session->state().phase == Phase::finished;
  if (finished && alive) {
    send_all(fd, wire::encode_end(*session));
  }
  disconnected = true;
  ::shutdown(fd, SHUT_RD);
  receiver.join();
  if (observer_) {
    try {
      observer_(*session, finished);
    } catch (const std::exception & e) {
      spdlog::error("session observer failed for {}: {}", session_id, e.what());
    }
  }
  registry_.remove(session_id);
  finish();
}

LineClient::LineClient(const std::string & host, std::uint16_t port)
{
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) {
    throw socket_error("socket");
  }
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    throw std::invalid_argument("bad address '" + host + "'");
  }
  if (::connect(fd_, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) < 0) {
    const auto error = socket_error("connect");
    ::close(fd_);
    throw error;
  }
  const int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

LineClient::~LineClient() { close(); }

void LineClient::send_line(const std::string & line)
{
  if (fd_ < 0 || !send_all(fd_, line)) {
    throw std::runtime_error("send failed");
  }
}

std::optional<std::string> LineClient::read_line(std::chrono::milliseconds timeout)
{
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const auto newline = buffer_.find('\n');
    if (newline != std::string::npos) {
      std::string line = buffer_.substr(0, newline);
      buffer_.erase(0, newline + 1);
      return line;
    }
    if (fd_ < 0) {
      return std::nullopt;
    }
    const auto left =
      std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      return std::nullopt;
    }
    pollfd pfd{fd_, POLLIN, 0};
    if (::poll(&pfd, 1, static_cast<int>(left.count())) <= 0) {
      continue;
    }
    char chunk[4096];
    const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
    if (n <= 0) {
      return std::nullopt;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void LineClient::close()
{
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

}  // namespace hgdagger::session
