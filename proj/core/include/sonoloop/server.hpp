#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "sonoloop/protocol.hpp"
#include "sonoloop/scenario.hpp"
#include "sonoloop/simulation.hpp"

namespace sonoloop {

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
  bool paced = true;       // tick at the scenario rate instead of as fast as possible
};

/// Blocking FIFO shared between one producer side and one consumer side.
template <typename T>
class MessageQueue {
 public:
  void push(T item) {
    {
      std::lock_guard lock(mutex_);
      items_.push_back(std::move(item));
    }
    ready_.notify_one();
  }

  /// Waits up to `timeout` for an item.
  template <typename Duration>
  bool pop(T& out, Duration timeout) {
    std::unique_lock lock(mutex_);
    if (!ready_.wait_for(lock, timeout, [&] { return !items_.empty() || closed_; }) || items_.empty()) {
      return false;
    }
    out = std::move(items_.front());
    items_.pop_front();
    return true;
  }

  bool try_pop(T& out) {
    std::lock_guard lock(mutex_);
    if (items_.empty()) {
      return false;
    }
    out = std::move(items_.front());
    items_.pop_front();
    return true;
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    ready_.notify_all();
  }

  bool closed() {
    std::lock_guard lock(mutex_);
    return closed_;
  }

  void reopen() {
    std::lock_guard lock(mutex_);
    closed_ = false;
    items_.clear();
  }

 private:
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<T> items_;
  bool closed_ = false;
};

/// Live session endpoint: one simulation thread owns the loop; a reader and a
/// writer thread move framed messages between the socket and two queues. A
/// second client is refused while a session is active.
class Server {
 public:
  Server(Scenario scenario, ServerOptions options);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts serving. Throws std::system_error on bind failure.
  void start();
  void stop();
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();

  std::uint16_t port() const noexcept { return port_; }
  std::int64_t tick() const noexcept { return tick_.load(); }
  std::int64_t gaze_dropped() const noexcept { return dropped_.load(); }

 private:
  struct Inbound {
    bool disconnect = false;
    protocol::ClientMessage message;
    std::int64_t arrival_tick = 0;
  };

  void accept_loop();
  void read_loop(int fd);
  void write_loop(int fd);
  void sim_loop();
  void handle(const Inbound& in);
  void handle_command(const protocol::Command& cmd);
  void tick_once();
  void send(nlohmann::json message);
  void end_session();

  Scenario scenario_;
  ServerOptions options_;
  std::unique_ptr<Simulation> sim_;

  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<bool> running_{false};
  std::atomic<std::int64_t> tick_{0};
  std::atomic<std::int64_t> dropped_{0};

  std::mutex session_mutex_;
  int session_fd_ = -1;
  std::atomic<bool> session_active_{false};
  bool greeted_ = false;  // sim thread only
  std::thread reader_;
  std::thread writer_;
  std::thread acceptor_;
  std::thread sim_thread_;

  MessageQueue<Inbound> inbound_;
  MessageQueue<std::string> outbound_;

  std::vector<GazeSample> pending_gaze_;  // sim thread only
  std::vector<GazeSample> paused_gaze_;   // sim thread only
};

}  // namespace sonoloop
