// SPDX-License-Identifier: Apache-2.0

#include "chai/service/server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <system_error>

namespace chai::service {

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw std::system_error(errno, std::generic_category(), what);
}

bool write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

sockaddr_un unix_address(const std::string& path) {
  sockaddr_un sa{};
  sa.sun_family = AF_UNIX;
  if (path.size() >= sizeof(sa.sun_path)) throw std::invalid_argument("unix socket path too long: " + path);
  std::memcpy(sa.sun_path, path.c_str(), path.size() + 1);
  return sa;
}

sockaddr_in tcp_address(const ListenAddress& address) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(static_cast<std::uint16_t>(address.port));
  const std::string host = address.host == "localhost" ? "127.0.0.1" : address.host;
  if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1) {
    throw std::invalid_argument("listen host must be an IPv4 address: " + address.host);
  }
  return sa;
}

// Cap on one request line; longer input closes the connection.
constexpr std::size_t kMaxLineBytes = 1 << 20;

}  // namespace

LineServer::LineServer(CacheService& service, const ListenAddress& address) : service_(service), address_(address) {
  if (address_.kind == ListenAddress::Kind::unix_socket) {
    const sockaddr_un sa = unix_address(address_.path);
    listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (listen_fd_ < 0) throw_errno("socket");
    ::unlink(address_.path.c_str());
    if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&sa), sizeof(sa)) < 0) {
      ::close(listen_fd_);
      throw_errno("bind " + address_.path);
    }
  } else {
    const sockaddr_in sa = tcp_address(address_);
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (listen_fd_ < 0) throw_errno("socket");
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&sa), sizeof(sa)) < 0) {
      ::close(listen_fd_);
      throw_errno("bind " + address_.to_string());
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    address_.port = ntohs(bound.sin_port);
  }
  if (::listen(listen_fd_, 64) < 0) {
    ::close(listen_fd_);
    throw_errno("listen");
  }
}

LineServer::~LineServer() { stop(); }

void LineServer::serve() {
  while (!stopping_.load()) {
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      break;
    }
    reap_finished();
    std::lock_guard lock(conn_mutex_);
    if (stopping_.load()) {
      ::close(fd);
      break;
    }
    open_fds_.push_back(fd);
    auto done = std::make_shared<std::atomic<bool>>(false);
    workers_.push_back(Worker{std::thread([this, fd, done] {
                                handle_connection(fd);
                                done->store(true);
                              }),
                              done});
  }
}

void LineServer::reap_finished() {
  std::list<Worker> finished;
  {
    std::lock_guard lock(conn_mutex_);
    for (auto it = workers_.begin(); it != workers_.end();) {
      auto next = std::next(it);
      if (it->done->load()) finished.splice(finished.end(), workers_, it);
      it = next;
    }
  }
  for (auto& w : finished) w.thread.join();
}

void LineServer::start() {
  accept_thread_ = std::thread([this] { serve(); });
}

void LineServer::stop_accepting() noexcept {
  stopping_.store(true);
  if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
}

void LineServer::stop() {
  if (stopped_.exchange(true)) return;
  stop_accepting();
  if (accept_thread_.joinable()) accept_thread_.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  std::list<Worker> workers;
  {
    std::lock_guard lock(conn_mutex_);
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.thread.join();
  if (address_.kind == ListenAddress::Kind::unix_socket) ::unlink(address_.path.c_str());
}

void LineServer::handle_connection(int fd) {
  std::string buffer;
  char chunk[4096];
  bool open = true;
  while (open) {
    const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t start = 0;
    for (std::size_t nl; (nl = buffer.find('\n', start)) != std::string::npos; start = nl + 1) {
      std::string_view line(buffer.data() + start, nl - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty()) continue;
      std::string response = service_.handle_line(line);
      response += '\n';
      if (!write_all(fd, response)) {
        open = false;
        break;
      }
    }
    buffer.erase(0, start);
    if (buffer.size() > kMaxLineBytes) break;
  }
  std::lock_guard lock(conn_mutex_);
  open_fds_.remove(fd);
  ::close(fd);
}

LineClient::LineClient(const ListenAddress& address) {
  if (address.kind == ListenAddress::Kind::unix_socket) {
    const sockaddr_un sa = unix_address(address.path);
    fd_ = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd_ < 0) throw_errno("socket");
    if (::connect(fd_, reinterpret_cast<const sockaddr*>(&sa), sizeof(sa)) < 0) {
      ::close(fd_);
      throw_errno("connect " + address.path);
    }
  } else {
    const sockaddr_in sa = tcp_address(address);
    fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd_ < 0) throw_errno("socket");
    if (::connect(fd_, reinterpret_cast<const sockaddr*>(&sa), sizeof(sa)) < 0) {
      ::close(fd_);
      throw_errno("connect " + address.to_string());
    }
  }
}

LineClient::~LineClient() {
  if (fd_ >= 0) ::close(fd_);
}

std::string LineClient::request(std::string_view line) {
  std::string out(line);
  out += '\n';
  if (!write_all(fd_, out)) throw_errno("send");
  char chunk[4096];
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string response = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return response;
    }
    const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n < 0) throw_errno("recv");
    if (n == 0) throw std::system_error(std::make_error_code(std::errc::connection_reset), "connection closed");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace chai::service
