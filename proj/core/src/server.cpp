#include "sonoloop/server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <system_error>

#include <spdlog/spdlog.h>

#include "sonoloop/errors.hpp"

namespace sonoloop {

namespace {

using namespace std::chrono_literals;
using nlohmann::json;

bool send_all(int fd, const std::string& bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) {
      continue;
    }
    if (n <= 0) {
      return false;
    }
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

Server::Server(Scenario scenario, ServerOptions options)
    : scenario_(std::move(scenario)), options_(std::move(options)), sim_(std::make_unique<Simulation>(scenario_)) {}

Server::~Server() { stop(); }

void Server::start() {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* found = nullptr;
  const std::string port = std::to_string(options_.port);
  if (const int rc = ::getaddrinfo(options_.host.c_str(), port.c_str(), &hints, &found); rc != 0) {
    throw std::system_error(EINVAL, std::generic_category(), "cannot resolve " + options_.host + ": " + gai_strerror(rc));
  }
  listen_fd_ = ::socket(found->ai_family, found->ai_socktype, found->ai_protocol);
  if (listen_fd_ < 0) {
    ::freeaddrinfo(found);
    throw std::system_error(errno, std::generic_category(), "socket");
  }
  const int yes = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  if (::bind(listen_fd_, found->ai_addr, found->ai_addrlen) != 0 || ::listen(listen_fd_, 4) != 0) {
    const int err = errno;
    ::freeaddrinfo(found);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::system_error(err, std::generic_category(), "cannot bind " + options_.host + ":" + port);
  }
  ::freeaddrinfo(found);
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
  spdlog::info("serving {} on {}:{}", scenario_.name, options_.host, port_);

  stopping_ = false;
  sim_thread_ = std::thread([this] { sim_loop(); });
  acceptor_ = std::thread([this] { accept_loop(); });
}

void Server::stop() {
  stopping_ = true;
  inbound_.close();
  if (acceptor_.joinable()) {
    acceptor_.join();
  }
  if (sim_thread_.joinable()) {
    sim_thread_.join();
  }
  end_session();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
}

void Server::wait() {
  while (!stopping_) {
    std::this_thread::sleep_for(50ms);
  }
}

void Server::accept_loop() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 100) <= 0) {
      continue;
    }
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      continue;
    }
    const int yes = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
    std::lock_guard lock(session_mutex_);
    if (session_fd_ >= 0) {
      send_all(fd, protocol::frame(protocol::error(std::nullopt, "a session is already active")));
      ::close(fd);
      continue;
    }
    spdlog::info("client connected");
    session_fd_ = fd;
    outbound_.reopen();
    session_active_ = true;
    reader_ = std::thread([this, fd] { read_loop(fd); });
    writer_ = std::thread([this, fd] { write_loop(fd); });
  }
}

void Server::read_loop(int fd) {
  protocol::FrameDecoder decoder;
  char buf[65536];
  while (true) {
    const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) {
      continue;
    }
    if (n <= 0) {
      break;
    }
    try {
      decoder.feed({buf, static_cast<std::size_t>(n)});
      while (auto payload = decoder.next()) {
        Inbound in;
        in.arrival_tick = tick_.load();
        try {
          in.message = protocol::parse_client(*payload);
        } catch (const protocol::ProtocolError& e) {
          send(protocol::error(std::nullopt, e.what()));
          continue;
        }
        if (const auto* gaze = std::get_if<protocol::GazeMessage>(&in.message)) {
          send(protocol::gaze_ack(gaze->seq, in.arrival_tick, gaze->samples.size(), !running_.load()));
        }
        inbound_.push(std::move(in));
      }
    } catch (const protocol::ProtocolError& e) {
      send(protocol::error(std::nullopt, e.what()));
      break;
    }
  }
  Inbound bye;
  bye.disconnect = true;
  inbound_.push(std::move(bye));
}

void Server::write_loop(int fd) {
  while (true) {
    std::string bytes;
    if (outbound_.pop(bytes, 50ms)) {
      if (!send_all(fd, bytes)) {
        break;
      }
    } else if (outbound_.closed()) {
      break;
    }
  }
}

void Server::send(json message) {
  if (session_active_) {
    outbound_.push(protocol::frame(message));
  }
}

void Server::end_session() {
  std::lock_guard lock(session_mutex_);
  if (session_fd_ < 0) {
    return;
  }
  session_active_ = false;
  ::shutdown(session_fd_, SHUT_RDWR);
  outbound_.close();
  if (writer_.joinable()) {
    writer_.join();
  }
  if (reader_.joinable()) {
    reader_.join();
  }
  ::close(session_fd_);
  session_fd_ = -1;
  spdlog::info("client disconnected");
}

void Server::sim_loop() {
  auto next = std::chrono::steady_clock::now();
  const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(1.0 / scenario_.tick_rate_hz));
  while (!stopping_) {
    Inbound in;
    while (inbound_.try_pop(in)) {
      handle(in);
    }
    if (!running_) {
      if (inbound_.pop(in, 20ms)) {
        handle(in);
      }
      next = std::chrono::steady_clock::now();
      continue;
    }
    tick_once();
    if (options_.paced) {
      next += period;
      for (auto now = std::chrono::steady_clock::now(); now < next && running_ && !stopping_;
           now = std::chrono::steady_clock::now()) {
        if (inbound_.pop(in, next - now)) {
          handle(in);
        }
      }
    }
  }
}

void Server::tick_once() {
  if (sim_->done()) {
    running_ = false;
    return;
  }
  const std::int64_t t = sim_->tick();
  std::vector<GazeSample> gaze;
  for (GazeSample s : pending_gaze_) {
    if (t - s.t > 1) {
      ++dropped_;
      continue;
    }
    s.t = t;
    gaze.push_back(s);
  }
  pending_gaze_.clear();

  const bool scripted = sim_->scenario().gaze.kind == GazeSourceKind::scripted;
  const TickRecord rec = scripted ? sim_->step() : sim_->step(gaze);
  tick_ = sim_->tick();
  if (greeted_) {
    send(protocol::state(rec, sim_->products(), {dropped_.load(), running_.load()}));
  }
}

void Server::handle(const Inbound& in) {
  if (in.disconnect) {
    running_ = false;
    greeted_ = false;
    pending_gaze_.clear();
    paused_gaze_.clear();
    end_session();
    return;
  }
  if (const auto* hello = std::get_if<protocol::Hello>(&in.message)) {
    if (hello->version != protocol::kVersion) {
      send(protocol::error(std::nullopt, "unsupported protocol version " + std::to_string(hello->version)));
      return;
    }
    greeted_ = true;
    send(protocol::welcome(sim_->scenario(), sim_->tick(), running_.load()));
    return;
  }
  if (!greeted_) {
    send(protocol::error(std::nullopt, "send hello first"));
    return;
  }
  if (const auto* cmd = std::get_if<protocol::Command>(&in.message)) {
    handle_command(*cmd);
    return;
  }
  const auto& gaze = std::get<protocol::GazeMessage>(in.message);
  auto& target = running_ ? pending_gaze_ : paused_gaze_;
  for (GazeSample s : gaze.samples) {
    s.t = in.arrival_tick;
    target.push_back(s);
  }
}

void Server::handle_command(const protocol::Command& cmd) {
  const std::string& name = cmd.name;
  try {
    if (name == "start") {
      // Gaze captured while paused refers to a frozen frame; it is never applied.
      dropped_ += static_cast<std::int64_t>(paused_gaze_.size());
      paused_gaze_.clear();
      running_ = true;
      send(protocol::ack(cmd.id, name, {{"tick", sim_->tick()}}));
    } else if (name == "pause") {
      running_ = false;
      send(protocol::ack(cmd.id, name, {{"tick", sim_->tick()}}));
    } else if (name == "reset") {
      sim_->reset();
      tick_ = 0;
      pending_gaze_.clear();
      paused_gaze_.clear();
      send(protocol::ack(cmd.id, name, {{"tick", 0}}));
    } else if (name == "step") {
      if (running_) {
        throw DomainError("step is only allowed while paused");
      }
      const std::int64_t count = cmd.args.value("count", std::int64_t{1});
      if (count < 1) {
        throw DomainError("count must be positive");
      }
      send(protocol::ack(cmd.id, name, {{"tick", sim_->tick()}}));
      for (std::int64_t i = 0; i < count && !sim_->done(); ++i) {
        tick_once();
      }
    } else if (name == "toggle_correction") {
      bool enabled = !sim_->scenario().control.correction_enabled;
      if (cmd.args.contains("enabled")) {
        if (!cmd.args["enabled"].is_boolean()) {
          throw DomainError("enabled must be a boolean");
        }
        enabled = cmd.args["enabled"].get<bool>();
      }
      sim_->set_correction(enabled);
      send(protocol::ack(cmd.id, name, {{"correction", enabled}}));
    } else if (name == "set_params") {
      json doc = scenario_to_json(sim_->scenario());
      if (cmd.args.contains("control")) {
        doc["control"].merge_patch(cmd.args["control"]);
      }
      const Scenario updated = parse_scenario(doc);
      sim_->set_control(updated.control);
      send(protocol::ack(cmd.id, name, {{"control", doc["control"]}}));
    } else if (name == "load_scenario") {
      Scenario next;
      if (cmd.args.contains("path") && cmd.args["path"].is_string()) {
        next = load_scenario(cmd.args["path"].get<std::string>());
      } else if (cmd.args.contains("scenario")) {
        next = parse_scenario(cmd.args["scenario"]);
      } else {
        throw DomainError("load_scenario needs 'path' or 'scenario'");
      }
      auto sim = std::make_unique<Simulation>(next);
      running_ = false;
      sim_ = std::move(sim);
      scenario_ = std::move(next);
      tick_ = 0;
      pending_gaze_.clear();
      paused_gaze_.clear();
      send(protocol::ack(cmd.id, name, {{"scenario", scenario_.name}}));
    } else {
      throw DomainError("unknown command '" + name + "'");
    }
  } catch (const ValidationError& e) {
    std::string message = e.what();
    for (const auto& issue : e.issues()) {
      message += "\n" + issue;
    }
    send(protocol::error(cmd.id, message));
  } catch (const std::exception& e) {
    send(protocol::error(cmd.id, e.what()));
  }
}

}  // namespace sonoloop
