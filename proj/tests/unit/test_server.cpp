#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <optional>
#include <thread>

#include <sonoloop/server.hpp>

#include "fixtures.hpp"

using namespace sonoloop;
using namespace std::chrono_literals;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

class Client {
 public:
  explicit Client(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      throw std::runtime_error("connect failed");
    }
  }
  ~Client() { close(); }

  void close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

  void send(const json& message) { send_raw(protocol::frame(message)); }

  void send_raw(const std::string& bytes) {
    ASSERT_EQ(::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL), static_cast<ssize_t>(bytes.size()));
  }

  void command(const std::string& name, std::int64_t id, json args = json::object()) {
    send({{"type", "command"}, {"id", id}, {"name", name}, {"args", std::move(args)}});
  }

  /// Next message of the given type; other types are discarded.
  std::optional<json> expect(const std::string& type, std::chrono::milliseconds timeout = 3000ms) {
    const auto deadline = Clock::now() + timeout;
    while (Clock::now() < deadline) {
      while (auto payload = decoder_.next()) {
        json m = json::parse(*payload);
        if (m["type"] == type) {
          return m;
        }
      }
      if (!pump(deadline)) {
        break;
      }
    }
    return std::nullopt;
  }

  /// True once the server closes the connection.
  bool closed_by_peer(std::chrono::milliseconds timeout = 3000ms) {
    const auto deadline = Clock::now() + timeout;
    while (Clock::now() < deadline) {
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, 20) <= 0) {
        continue;
      }
      char buf[4096];
      const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
      if (n <= 0) {
        return true;
      }
      decoder_.feed({buf, static_cast<std::size_t>(n)});
    }
    return false;
  }

  protocol::FrameDecoder& decoder() { return decoder_; }

 private:
  bool pump(Clock::time_point deadline) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    pollfd p{fd_, POLLIN, 0};
    if (::poll(&p, 1, static_cast<int>(std::max<std::int64_t>(1, left.count()))) <= 0) {
      return true;
    }
    char buf[65536];
    const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n <= 0) {
      return false;
    }
    decoder_.feed({buf, static_cast<std::size_t>(n)});
    return true;
  }

  int fd_ = -1;
  protocol::FrameDecoder decoder_;
};

Scenario live_scenario() {
  Scenario s = fixture::scenario("flat_straight");
  s.gaze.kind = GazeSourceKind::live;
  s.gaze.schedule.clear();
  s.gaze.glances.clear();
  return s;
}

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    server_ = std::make_unique<Server>(live_scenario(), ServerOptions{});
    server_->start();
  }
  void TearDown() override { server_->stop(); }

  std::unique_ptr<Client> greeted() {
    auto c = std::make_unique<Client>(server_->port());
    c->send({{"type", "hello"}, {"version", protocol::kVersion}});
    auto w = c->expect("welcome");
    EXPECT_TRUE(w);
    return c;
  }

  std::unique_ptr<Server> server_;
};

json gaze_message(std::int64_t seq, double x, double y, int n = 4) {
  json samples = json::array();
  for (int i = 0; i < n; ++i) {
    samples.push_back({{"x", x}, {"y", y}, {"t", 0}, {"valid", true}});
  }
  return {{"type", "gaze"}, {"seq", seq}, {"samples", samples}};
}

}  // namespace

TEST_F(ServerTest, HelloGetsWelcome) {
  Client c(server_->port());
  c.send({{"type", "hello"}, {"version", protocol::kVersion}, {"client", "test"}});
  const auto w = c.expect("welcome");
  ASSERT_TRUE(w);
  EXPECT_EQ((*w)["version"], protocol::kVersion);
  EXPECT_EQ((*w)["scenario"], "flat_straight");
  EXPECT_EQ((*w)["running"], false);
  EXPECT_EQ((*w)["geometry"]["width_px"], 256);
}

TEST_F(ServerTest, WrongVersionAndCommandsBeforeHelloAreRefused) {
  Client c(server_->port());
  c.command("start", 1);
  EXPECT_TRUE(c.expect("error"));
  c.send({{"type", "hello"}, {"version", 42}});
  const auto e = c.expect("error");
  ASSERT_TRUE(e);
  EXPECT_NE((*e)["message"].get<std::string>().find("version"), std::string::npos);
  EXPECT_EQ(server_->tick(), 0);
}

TEST_F(ServerTest, StartStreamsStatePauseFreezes) {
  auto c = greeted();
  c->command("start", 1);
  EXPECT_TRUE(c->expect("ack"));
  const auto s = c->expect("state");
  ASSERT_TRUE(s);
  EXPECT_TRUE((*s)["frame"]["data"].is_string());
  EXPECT_EQ(protocol::unpack_image((*s)["frame"]).width(), 256);
  c->command("pause", 2);
  const auto ack = c->expect("ack");
  ASSERT_TRUE(ack);
  const std::int64_t frozen = server_->tick();
  std::this_thread::sleep_for(200ms);
  EXPECT_EQ(server_->tick(), frozen);
  EXPECT_GE(frozen, 1);
}

TEST_F(ServerTest, StepOnlyWhilePaused) {
  auto c = greeted();
  c->command("step", 1, {{"count", 3}});
  EXPECT_TRUE(c->expect("ack"));
  for (int i = 0; i < 3; ++i) {
    EXPECT_TRUE(c->expect("state"));
  }
  EXPECT_EQ(server_->tick(), 3);
  c->command("step", 2, {{"count", 0}});
  EXPECT_TRUE(c->expect("error"));
  c->command("start", 3);
  c->command("step", 4);
  const auto e = c->expect("error");
  ASSERT_TRUE(e);
  EXPECT_EQ((*e)["id"], 4);
}

TEST_F(ServerTest, GazeDuringPauseIsDroppedAtStart) {
  auto c = greeted();
  c->send(gaze_message(1, 128, 80, 5));
  const auto ack = c->expect("gaze_ack");
  ASSERT_TRUE(ack);
  EXPECT_EQ((*ack)["buffered"], true);
  EXPECT_EQ((*ack)["samples"], 5);
  c->command("step", 1);
  const auto s = c->expect("state");
  ASSERT_TRUE(s);
  EXPECT_EQ((*s)["attention_kind"], "zero");
  c->command("start", 2);
  EXPECT_TRUE(c->expect("ack"));
  const auto running = c->expect("state");
  ASSERT_TRUE(running);
  EXPECT_EQ((*running)["gaze_dropped"], 5);
  EXPECT_EQ(server_->gaze_dropped(), 5);
}

TEST_F(ServerTest, LiveGazeRoundTripIsFast) {
  auto c = greeted();
  c->command("start", 1);
  ASSERT_TRUE(c->expect("state"));
  for (int i = 0; i < 10; ++i) {
    const auto t0 = Clock::now();
    c->send(gaze_message(i, 128, 80));
    const auto ack = c->expect("gaze_ack");
    const auto dt = Clock::now() - t0;
    ASSERT_TRUE(ack);
    EXPECT_EQ((*ack)["seq"], i);
    EXPECT_EQ((*ack)["buffered"], false);
    EXPECT_LT(dt, 100ms);
  }
  // Sustained gaze on the vessel eventually shows up as a selection.
  std::optional<json> s;
  for (int i = 0; i < 40; ++i) {
    c->send(gaze_message(100 + i, 128, 80));
    s = c->expect("state");
    ASSERT_TRUE(s);
    if (!(*s)["telemetry"]["target"].is_null()) {
      break;
    }
  }
  EXPECT_FALSE((*s)["telemetry"]["target"].is_null());
  EXPECT_FALSE((*s)["mask"].is_null());
}

TEST_F(ServerTest, ToggleCorrectionAndSetParams) {
  auto c = greeted();
  c->command("toggle_correction", 1, {{"enabled", false}});
  auto ack = c->expect("ack");
  ASSERT_TRUE(ack);
  EXPECT_EQ((*ack)["detail"]["correction"], false);
  c->command("toggle_correction", 2);
  ack = c->expect("ack");
  ASSERT_TRUE(ack);
  EXPECT_EQ((*ack)["detail"]["correction"], true);
  c->command("toggle_correction", 3, {{"enabled", "yes"}});
  EXPECT_TRUE(c->expect("error"));

  c->command("set_params", 4, {{"control", {{"angular_gain", 2.5}}}});
  ack = c->expect("ack");
  ASSERT_TRUE(ack);
  EXPECT_EQ((*ack)["detail"]["control"]["angular_gain"], 2.5);
  c->command("set_params", 5, {{"control", {{"stiffness", -1.0}}}});
  const auto e = c->expect("error");
  ASSERT_TRUE(e);
  EXPECT_NE((*e)["message"].get<std::string>().find("control.stiffness"), std::string::npos);
}

TEST_F(ServerTest, LoadScenario) {
  auto c = greeted();
  c->command("load_scenario", 1, {{"path", "/nonexistent/scenario.json"}});
  EXPECT_TRUE(c->expect("error"));
  c->command("load_scenario", 2, {{"scenario", {{"name", "broken"}}}});
  EXPECT_TRUE(c->expect("error"));
  c->command("load_scenario", 3, {{"path", fixture::scenario_path("cylinder_tilt")}});
  const auto ack = c->expect("ack");
  ASSERT_TRUE(ack);
  EXPECT_EQ((*ack)["detail"]["scenario"], "cylinder_tilt");
  c->command("step", 4);
  EXPECT_TRUE(c->expect("state"));
  EXPECT_EQ(server_->tick(), 1);
}

TEST_F(ServerTest, MalformedMessagesDoNotEndTheSession) {
  auto c = greeted();
  c->send_raw(protocol::frame(json::array({1, 2})));
  EXPECT_TRUE(c->expect("error"));
  const std::string junk = "{not json";
  const std::uint32_t n = htonl(static_cast<std::uint32_t>(junk.size()));
  c->send_raw(std::string(reinterpret_cast<const char*>(&n), 4) + junk);
  EXPECT_TRUE(c->expect("error"));
  c->command("teleport", 1);
  EXPECT_TRUE(c->expect("error"));
  c->command("step", 2);
  EXPECT_TRUE(c->expect("state"));
}

TEST_F(ServerTest, SecondClientIsRefused) {
  auto first = greeted();
  Client second(server_->port());
  EXPECT_TRUE(second.closed_by_peer());
  auto m = second.decoder().next();
  ASSERT_TRUE(m);
  EXPECT_EQ(json::parse(*m)["type"], "error");
  first->command("step", 1);
  EXPECT_TRUE(first->expect("state"));
}

TEST_F(ServerTest, DisconnectPausesAndFreesTheSlot) {
  {
    auto c = greeted();
    c->command("start", 1);
    ASSERT_TRUE(c->expect("state"));
  }
  std::this_thread::sleep_for(150ms);
  const std::int64_t t = server_->tick();
  std::this_thread::sleep_for(150ms);
  EXPECT_EQ(server_->tick(), t);
  auto again = greeted();
  EXPECT_TRUE(again);
}

TEST(Server, BindFailureThrows) {
  Server a(live_scenario(), {});
  a.start();
  Server b(live_scenario(), {"127.0.0.1", a.port(), true});
  EXPECT_THROW(b.start(), std::system_error);
  a.stop();
}
