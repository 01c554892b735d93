#include <gtest/gtest.h>

#include <string>

#include <sonoloop/protocol.hpp>

using namespace sonoloop;
using namespace sonoloop::protocol;
using nlohmann::json;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(Framing, LengthPrefixIsBigEndian) {
  const std::string f = frame(json{{"a", 1}});
  ASSERT_EQ(f.size(), 4u + 7u);
  EXPECT_EQ(f.substr(0, 4), std::string("\0\0\0\x07", 4));
  EXPECT_EQ(f.substr(4), R"({"a":1})");
}

TEST(Framing, DecoderHandlesPartialAndBatchedFeeds) {
  const std::string a = frame(json{{"type", "hello"}, {"version", 1}});
  const std::string b = frame(json{{"type", "gaze"}, {"samples", json::array()}});
  const std::string stream = a + b;

  FrameDecoder d;
  std::vector<std::string> got;
  for (char c : stream) {
    d.feed(std::span(&c, 1));
    while (auto m = d.next()) {
      got.push_back(*m);
    }
  }
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0], a.substr(4));
  EXPECT_EQ(got[1], b.substr(4));
  EXPECT_EQ(d.buffered(), 0u);

  FrameDecoder all;
  all.feed(stream);
  EXPECT_TRUE(all.next());
  EXPECT_TRUE(all.next());
  EXPECT_FALSE(all.next());
}

TEST(Framing, OversizedPrefixIsRejected) {
  FrameDecoder d;
  const std::string prefix("\x01\x00\x00\x01", 4);
  d.feed(prefix);
  EXPECT_THROW(d.next(), ProtocolError);
}

TEST(ClientMessages, ParseEachKind) {
  const auto hello = parse_client(R"({"type":"hello","version":1,"client":"ui"})");
  ASSERT_TRUE(std::holds_alternative<Hello>(hello));
  EXPECT_EQ(std::get<Hello>(hello).version, 1);

  const auto cmd = parse_client(R"({"type":"command","id":7,"name":"step","args":{"count":3}})");
  ASSERT_TRUE(std::holds_alternative<Command>(cmd));
  EXPECT_EQ(std::get<Command>(cmd).id, 7);
  EXPECT_EQ(std::get<Command>(cmd).args["count"], 3);

  const auto gaze = parse_client(R"({"type":"gaze","seq":2,"samples":[{"x":1.5,"y":2,"valid":false},{"x":3,"y":4}]})");
  ASSERT_TRUE(std::holds_alternative<GazeMessage>(gaze));
  const auto& samples = std::get<GazeMessage>(gaze).samples;
  ASSERT_EQ(samples.size(), 2u);
  EXPECT_FALSE(samples[0].valid);
  EXPECT_TRUE(samples[1].valid);
  EXPECT_EQ(samples[0].x, 1.5);
}

TEST(ClientMessages, RoundTripThroughJson) {
  const ClientMessage cmd = Command{4, "set_params", json{{"control", {{"angular_gain", 2.0}}}}};
  const auto back = parse_client(to_json(cmd).dump());
  EXPECT_EQ(std::get<Command>(back).name, "set_params");
  EXPECT_EQ(std::get<Command>(back).args, std::get<Command>(cmd).args);

  const ClientMessage gaze = GazeMessage{9, {{10.0, 20.0, 3, true}}};
  const auto g = std::get<GazeMessage>(parse_client(to_json(gaze).dump()));
  EXPECT_EQ(g.seq, 9);
  EXPECT_EQ(g.samples, std::get<GazeMessage>(gaze).samples);
}

TEST(ClientMessages, MalformedInputThrows) {
  for (const char* bad : {"not json", "[]", R"({"version":1})", R"({"type":"hello"})",
                          R"({"type":"command"})", R"({"type":"command","name":"x","args":[]})",
                          R"({"type":"gaze"})", R"({"type":"gaze","samples":[{"x":"a","y":1}]})",
                          R"({"type":"gaze","samples":[{"x":1,"y":1,"valid":1}]})",
                          R"({"type":"command","id":"7","name":"start"})", R"({"type":"bye"})"}) {
    EXPECT_THROW(parse_client(bad), ProtocolError) << bad;
  }
}

TEST(Base64, KnownVectors) {
  const std::pair<const char*, const char*> cases[] = {
      {"", ""}, {"f", "Zg=="}, {"fo", "Zm8="}, {"foo", "Zm9v"}, {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="},
      {"foobar", "Zm9vYmFy"}};
  for (const auto& [plain, encoded] : cases) {
    EXPECT_EQ(base64_encode(bytes_of(plain)), encoded);
    EXPECT_EQ(base64_decode(encoded), bytes_of(plain));
  }
  EXPECT_THROW(base64_decode("abc"), ProtocolError);
  EXPECT_THROW(base64_decode("Zg==Zg=="), ProtocolError);
  EXPECT_THROW(base64_decode("Z!=="), ProtocolError);
}

TEST(Base64, AllByteValues) {
  std::vector<std::uint8_t> all(256);
  for (int i = 0; i < 256; ++i) {
    all[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
  }
  EXPECT_EQ(base64_decode(base64_encode(all)), all);
}

TEST(Images, PackUnpack) {
  Image img(5, 3, 0.0);
  img(0, 0) = 1.0;
  img(4, 2) = 0.5;
  img(2, 1) = 2.0;  // clipped
  const auto raw = unpack_image(pack_image(img));
  EXPECT_EQ(raw.width(), 5);
  EXPECT_EQ(raw(0, 0), 255);
  EXPECT_EQ(raw(4, 2), 128);
  EXPECT_EQ(raw(2, 1), 255);
  EXPECT_EQ(raw(1, 1), 0);

  Mask m(4, 4, 0);
  m(1, 2) = 1;
  const auto back = unpack_image(pack_mask(m));
  EXPECT_EQ(back(1, 2), 255);
  EXPECT_EQ(back(2, 1), 0);

  json bad = pack_image(img);
  bad["width"] = 6;
  EXPECT_THROW(unpack_image(bad), ProtocolError);
}

TEST(ServerMessages, Shapes) {
  EXPECT_EQ(ack(3, "start")["id"], 3);
  EXPECT_TRUE(ack(std::nullopt, "start")["id"].is_null());
  EXPECT_EQ(error(1, "nope")["message"], "nope");
  const json g = gaze_ack(5, 10, 4, true);
  EXPECT_EQ(g["type"], "gaze_ack");
  EXPECT_EQ(g["tick"], 10);
  EXPECT_EQ(g["buffered"], true);
}
