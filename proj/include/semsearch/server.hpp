#pragma once

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "semsearch/bridge.hpp"
#include "semsearch/core/error.hpp"

namespace semsearch {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 7878;
  bool use_stdio = false;       // stdin/stdout acts as one more client
  int tick_ms = 50;             // pause between free-running steps
  bool exit_on_end = false;     // stop once the episode ends
};

/// Newline-delimited message server around one session. Commands from any
/// client are applied in arrival order by this loop; every outgoing message
/// goes to all clients.
class LineServer {
 public:
  using Observer = std::function<void(const json&)>;

  LineServer(Session& session, ServerConfig cfg) : session_(session), cfg_(std::move(cfg)) {}
  ~LineServer() {
    for (auto& c : clients_) {
      if (c.fd > 1) ::close(c.fd);
    }
    if (listen_fd_ >= 0) ::close(listen_fd_);
  }

  /// Called for every broadcast message (logging, recording).
  void on_message(Observer fn) { observer_ = std::move(fn); }

  int bound_port() const { return bound_port_; }

  void open() {
    if (cfg_.port < 0) return;
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw PortUnavailable(std::string("socket: ") + std::strerror(errno));
    int yes = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(cfg_.port));
    if (::inet_pton(AF_INET, cfg_.host.c_str(), &addr.sin_addr) != 1) throw PortUnavailable("bad host " + cfg_.host);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 8) < 0) {
      const std::string why = std::strerror(errno);
      ::close(listen_fd_);
      listen_fd_ = -1;
      throw PortUnavailable("port " + std::to_string(cfg_.port) + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    bound_port_ = ntohs(addr.sin_port);
  }

  /// Runs until stopped, the episode ends (when configured), or stdin
  /// closes in stdio-only mode.
  void run() {
    if (cfg_.use_stdio) add_client(0, 1);
    bool stdin_open = cfg_.use_stdio;
    while (!stop_) {
      std::vector<pollfd> fds;
      if (listen_fd_ >= 0) fds.push_back({listen_fd_, POLLIN, 0});
      for (const auto& c : clients_) fds.push_back({c.fd, POLLIN, 0});
      const bool running = session_.run_mode() == RunMode::free_running && !session_.episode().done();
      const int timeout = running ? cfg_.tick_ms : 200;
      const int ready = ::poll(fds.data(), fds.size(), timeout);
      if (ready < 0 && errno != EINTR) throw Error(std::string("poll: ") + std::strerror(errno));
      std::size_t k = 0;
      if (listen_fd_ >= 0) {
        if (ready > 0 && (fds[k].revents & POLLIN)) accept_client();
        ++k;
      }
      std::vector<int> closed;
      for (; k < fds.size(); ++k) {
        if (ready <= 0 || !(fds[k].revents & (POLLIN | POLLHUP | POLLERR))) continue;
        if (!read_client(fds[k].fd)) closed.push_back(fds[k].fd);
      }
      for (int fd : closed) {
        if (fd == 0) stdin_open = false;
        drop_client(fd);
      }
      if (session_.run_mode() == RunMode::free_running) broadcast(session_.tick());
      if (cfg_.exit_on_end && session_.episode().done()) break;
      if (cfg_.use_stdio && !stdin_open && listen_fd_ < 0 && session_.run_mode() != RunMode::free_running) break;
    }
  }

  void stop() { stop_ = true; }

 private:
  struct Client {
    int fd;
    int out_fd;
    std::string buffer;
  };

  void add_client(int fd, int out_fd) {
    clients_.push_back({fd, out_fd, {}});
    send(clients_.back(), session_.snapshot());
  }

  void accept_client() {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd >= 0) add_client(fd, fd);
  }

  void drop_client(int fd) {
    for (auto it = clients_.begin(); it != clients_.end(); ++it) {
      if (it->fd == fd) {
        if (fd > 1) ::close(fd);
        clients_.erase(it);
        return;
      }
    }
  }

  bool read_client(int fd) {
    char buf[4096];
    const ssize_t n = ::read(fd, buf, sizeof buf);
    if (n <= 0) return false;
    for (auto& c : clients_) {
      if (c.fd != fd) continue;
      c.buffer.append(buf, static_cast<std::size_t>(n));
      std::size_t pos;
      while ((pos = c.buffer.find('\n')) != std::string::npos) {
        std::string line = c.buffer.substr(0, pos);
        c.buffer.erase(0, pos + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        broadcast(session_.handle_line(line));
      }
      break;
    }
    return true;
  }

  void send(const Client& c, const json& msg) {
    const std::string line = msg.dump() + "\n";
    std::size_t off = 0;
    while (off < line.size()) {
      const ssize_t n = ::write(c.out_fd, line.data() + off, line.size() - off);
      if (n <= 0) {
        if (errno == EINTR) continue;
        return;
      }
      off += static_cast<std::size_t>(n);
    }
  }

  void broadcast(const std::vector<json>& msgs) {
    for (const auto& m : msgs) {
      if (observer_) observer_(m);
      for (const auto& c : clients_) send(c, m);
    }
  }

  Session& session_;
  ServerConfig cfg_;
  int listen_fd_ = -1;
  int bound_port_ = -1;
  std::vector<Client> clients_;
  Observer observer_;
  std::atomic<bool> stop_ = false;
};

}  // namespace semsearch
