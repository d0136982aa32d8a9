// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstddef>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "chai/service/config.hpp"
#include "chai/service/service.hpp"

namespace chai::service {

/// Line server over a stream socket, one thread per connection. Responses on
/// a connection are written in request order.
class LineServer {
 public:
  /// Binds and listens immediately; port 0 picks an ephemeral port.
  /// Throws std::system_error.
  LineServer(CacheService& service, const ListenAddress& address);
  ~LineServer();

  LineServer(const LineServer&) = delete;
  LineServer& operator=(const LineServer&) = delete;

  /// The bound address, with the actual port for TCP.
  const ListenAddress& address() const { return address_; }

  /// Accepts until stop(); blocks the caller.
  void serve();
  /// Starts serve() on a background thread.
  void start();
  /// Closes the listener and every open connection, then joins threads.
  void stop();
  /// Makes serve() return; async-signal-safe.
  void stop_accepting() noexcept;

 private:
  void handle_connection(int fd);

  CacheService& service_;
  ListenAddress address_;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::atomic<bool> stopped_{false};
  std::thread accept_thread_;
  std::mutex conn_mutex_;
  struct Worker {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };
  void reap_finished();

  std::list<Worker> workers_;
  std::list<int> open_fds_;
};

/// Blocking client helper: sends each line and reads one response line per request.
class LineClient {
 public:
  explicit LineClient(const ListenAddress& address);
  ~LineClient();

  LineClient(const LineClient&) = delete;
  LineClient& operator=(const LineClient&) = delete;

  /// Throws std::system_error on I/O failure or a closed connection.
  std::string request(std::string_view line);

 private:
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace chai::service
