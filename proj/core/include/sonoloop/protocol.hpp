#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "sonoloop/attention.hpp"
#include "sonoloop/grid.hpp"
#include "sonoloop/simulation.hpp"

namespace sonoloop::protocol {

inline constexpr int kVersion = 1;
inline constexpr std::size_t kMaxMessageBytes = 16u << 20;

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 4-byte big-endian payload length, then the JSON text.
std::string frame(const nlohmann::json& message);

/// Splits a byte stream into complete messages. Throws ProtocolError on an
/// oversized length prefix; the stream cannot be resynchronized after that.
class FrameDecoder {
 public:
  void feed(std::span<const char> bytes);
  /// Next complete payload, if any.
  std::optional<std::string> next();
  std::size_t buffered() const noexcept { return buffer_.size(); }

 private:
  std::deque<char> buffer_;
};

// Client -> server.
struct Hello {
  int version = 0;
  std::string client;
};

struct Command {
  std::optional<std::int64_t> id;
  std::string name;  // start, pause, reset, step, toggle_correction, set_params, load_scenario
  nlohmann::json args = nlohmann::json::object();
};

struct GazeMessage {
  std::optional<std::int64_t> seq;
  std::vector<GazeSample> samples;  // t carries the client timestamp until the server retags it
};

using ClientMessage = std::variant<Hello, Command, GazeMessage>;

/// Throws ProtocolError on anything that is not a well-formed client message.
ClientMessage parse_client(const std::string& payload);

nlohmann::json to_json(const ClientMessage& message);

// Server -> client.
nlohmann::json welcome(const Scenario& scenario, std::int64_t tick, bool running);
nlohmann::json ack(std::optional<std::int64_t> id, const std::string& command, nlohmann::json detail = {});
nlohmann::json error(std::optional<std::int64_t> id, const std::string& message);
nlohmann::json gaze_ack(std::optional<std::int64_t> seq, std::int64_t tick, std::size_t samples, bool buffered);

struct StateStats {
  std::int64_t gaze_dropped = 0;
  bool running = false;
};

nlohmann::json state(const TickRecord& record, const TickProducts& products, const StateStats& stats);

/// zlib + base64 of an 8-bit image; values in [0, 1] are scaled to 0..255.
nlohmann::json pack_image(const Image& image);
nlohmann::json pack_mask(const Mask& mask);
/// Inverse of pack_image / pack_mask, returning the raw 8-bit pixels.
Grid<std::uint8_t> unpack_image(const nlohmann::json& packed);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace sonoloop::protocol
