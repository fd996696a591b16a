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

#ifndef HGDAGGER__SERVER_HPP_
#define HGDAGGER__SERVER_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hgdagger/ensemble.hpp"
#include "hgdagger/session.hpp"

// TCP host for operator sessions. One thread per connection runs the
// session's sequential tick/event loop at the requested wall-clock rate.
namespace hgdagger::session
{

struct CheckpointEntry
{
  std::shared_ptr<const nn::Ensemble> policy;
  std::optional<double> tau;
  SessionOptions options;
};

/// Maps a checkpoint id to a policy. Any exception rejects the session.
using CheckpointResolver = std::function<CheckpointEntry(const std::string & checkpoint_id)>;

/// Called from the connection thread once a session ends, whether it
/// finished or the client went away.
using SessionObserver = std::function<void(const Session & session, bool finished)>;

struct ServerConfig
{
  std::string host{"127.0.0.1"};
  // 0 picks an ephemeral port.
  std::uint16_t port{0};
  double max_rate_hz{1000.0};
};

class SessionServer
{
public:
  SessionServer(ServerConfig config, CheckpointResolver resolver, SessionObserver observer = {});
  ~SessionServer();

  SessionServer(const SessionServer &) = delete;
  SessionServer & operator=(const SessionServer &) = delete;

  /// Binds and starts accepting. Throws std::runtime_error on socket errors.
  void start();
  void stop();
  std::uint16_t port() const { return port_; }
  const SessionRegistry & registry() const { return registry_; }

private:
  void accept_loop();
  void serve(int fd);

  ServerConfig config_;
  CheckpointResolver resolver_;
  SessionObserver observer_;
  SessionRegistry registry_;
  int listen_fd_{-1};
  std::uint16_t port_{0};
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex connections_mutex_;
  std::vector<std::thread> connections_;
  std::vector<int> connection_fds_;
};

/// Blocking newline-framed TCP client, used by tests and tools.
class LineClient
{
public:
  LineClient(const std::string & host, std::uint16_t port);
  ~LineClient();

  LineClient(const LineClient &) = delete;
  LineClient & operator=(const LineClient &) = delete;

  void send_line(const std::string & line);
  /// Next line without its newline, or nullopt on timeout or end of stream.
  std::optional<std::string> read_line(std::chrono::milliseconds timeout);
  void close();

private:
  int fd_{-1};
  std::string buffer_;
};

}  // namespace hgdagger::session

#endif  // HGDAGGER__SERVER_HPP_
