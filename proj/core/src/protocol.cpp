#include "sonoloop/protocol.hpp"

#include <algorithm>
#include <cmath>

#include <zlib.h>

namespace sonoloop::protocol {

namespace {

using nlohmann::json;

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::optional<std::int64_t> optional_id(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) {
    return std::nullopt;
  }
  if (!it->is_number_integer()) {
    throw ProtocolError(std::string(key) + " must be an integer");
  }
  return it->get<std::int64_t>();
}

json opt(const std::optional<std::int64_t>& v) { return v ? json(*v) : json(nullptr); }
json opt(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }
json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json pack_bytes(std::span<const std::uint8_t> pixels, int width, int height) {
  uLongf size = compressBound(static_cast<uLong>(pixels.size()));
  std::vector<std::uint8_t> out(size);
  if (compress2(out.data(), &size, pixels.data(), static_cast<uLong>(pixels.size()), Z_BEST_SPEED) != Z_OK) {
    throw ProtocolError("zlib compression failed");
  }
  out.resize(size);
  return {{"width", width}, {"height", height}, {"encoding", "zlib+base64"}, {"data", base64_encode(out)}};
}

}  // namespace

std::string frame(const json& message) {
  const std::string body = message.dump();
  if (body.size() > kMaxMessageBytes) {
    throw ProtocolError("message too large");
  }
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string out;
  out.reserve(4 + body.size());
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out += body;
  return out;
}

void FrameDecoder::feed(std::span<const char> bytes) { buffer_.insert(buffer_.end(), bytes.begin(), bytes.end()); }

std::optional<std::string> FrameDecoder::next() {
  if (buffer_.size() < 4) {
    return std::nullopt;
  }
  std::uint32_t n = 0;
  for (int i = 0; i < 4; ++i) {
    n = (n << 8) | static_cast<std::uint8_t>(buffer_[static_cast<std::size_t>(i)]);
  }
  if (n > kMaxMessageBytes) {
    throw ProtocolError("length prefix exceeds the message limit");
  }
  if (buffer_.size() < 4 + static_cast<std::size_t>(n)) {
    return std::nullopt;
  }
  std::string payload(buffer_.begin() + 4, buffer_.begin() + 4 + n);
  buffer_.erase(buffer_.begin(), buffer_.begin() + 4 + n);
  return payload;
}

ClientMessage parse_client(const std::string& payload) {
  json doc;
  try {
    doc = json::parse(payload);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("type") || !doc["type"].is_string()) {
    throw ProtocolError("message needs a string 'type'");
  }
  const std::string type = doc["type"].get<std::string>();
  if (type == "hello") {
    if (!doc.contains("version") || !doc["version"].is_number_integer()) {
      throw ProtocolError("hello needs an integer 'version'");
    }
    Hello h;
    h.version = doc["version"].get<int>();
    if (doc.contains("client") && doc["client"].is_string()) {
      h.client = doc["client"].get<std::string>();
    }
    return h;
  }
  if (type == "command") {
    if (!doc.contains("name") || !doc["name"].is_string()) {
      throw ProtocolError("command needs a string 'name'");
    }
    Command c;
    c.id = optional_id(doc, "id");
    c.name = doc["name"].get<std::string>();
    if (doc.contains("args")) {
      if (!doc["args"].is_object()) {
        throw ProtocolError("command args must be an object");
      }
      c.args = doc["args"];
    }
    return c;
  }
  if (type == "gaze") {
    GazeMessage g;
    g.seq = optional_id(doc, "seq");
    if (!doc.contains("samples") || !doc["samples"].is_array()) {
      throw ProtocolError("gaze needs a 'samples' array");
    }
    for (const auto& s : doc["samples"]) {
      if (!s.is_object() || !s.contains("x") || !s.contains("y") || !s["x"].is_number() || !s["y"].is_number()) {
        throw ProtocolError("gaze sample needs numeric x and y");
      }
      GazeSample sample;
      sample.x = s["x"].get<double>();
      sample.y = s["y"].get<double>();
      if (!std::isfinite(sample.x) || !std::isfinite(sample.y)) {
        throw ProtocolError("gaze sample must be finite");
      }
      if (s.contains("t") && s["t"].is_number_integer()) {
        sample.t = s["t"].get<std::int64_t>();
      }
      if (s.contains("valid")) {
        if (!s["valid"].is_boolean()) {
          throw ProtocolError("gaze 'valid' must be a boolean");
        }
        sample.valid = s["valid"].get<bool>();
      }
      g.samples.push_back(sample);
    }
    return g;
  }
  throw ProtocolError("unknown message type '" + type + "'");
}

json to_json(const ClientMessage& message) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Hello>) {
          return {{"type", "hello"}, {"version", m.version}, {"client", m.client}};
        } else if constexpr (std::is_same_v<T, Command>) {
          json out{{"type", "command"}, {"name", m.name}, {"args", m.args}};
          if (m.id) {
            out["id"] = *m.id;
          }
          return out;
        } else {
          json samples = json::array();
          for (const auto& s : m.samples) {
            samples.push_back({{"x", s.x}, {"y", s.y}, {"t", s.t}, {"valid", s.valid}});
          }
          json out{{"type", "gaze"}, {"samples", samples}};
          if (m.seq) {
            out["seq"] = *m.seq;
          }
          return out;
        }
      },
      message);
}

json welcome(const Scenario& scenario, std::int64_t tick, bool running) {
  const auto& g = scenario.geometry;
  return {{"type", "welcome"},
          {"version", kVersion},
          {"scenario", scenario.name},
          {"tick", tick},
          {"tick_rate_hz", scenario.tick_rate_hz},
          {"running", running},
          {"geometry", {{"width_px", g.width_px}, {"depth_px", g.depth_px}, {"pixel_pitch", g.pixel_pitch}}}};
}

json ack(std::optional<std::int64_t> id, const std::string& command, json detail) {
  json out{{"type", "ack"}, {"id", opt(id)}, {"command", command}};
  if (!detail.is_null()) {
    out["detail"] = std::move(detail);
  }
  return out;
}

json error(std::optional<std::int64_t> id, const std::string& message) {
  return {{"type", "error"}, {"id", opt(id)}, {"message", message}};
}

json gaze_ack(std::optional<std::int64_t> seq, std::int64_t tick, std::size_t samples, bool buffered) {
  return {{"type", "gaze_ack"}, {"seq", opt(seq)}, {"tick", tick}, {"samples", samples}, {"buffered", buffered}};
}

json state(const TickRecord& record, const TickProducts& products, const StateStats& stats) {
  const TickTelemetry& t = record.telemetry;
  json candidates = json::array();
  for (const auto& c : record.candidates) {
    candidates.push_back({{"id", c.track_id}, {"cx", c.cx}, {"cy", c.cy}, {"area", c.area}});
  }
  json evidence = json::object();
  for (const auto& [id, e] : record.evidence) {
    evidence[std::to_string(id)] = e;
  }
  json out{{"type", "state"},
           {"tick", t.tick},
           {"running", stats.running},
           {"gaze_dropped", stats.gaze_dropped},
           {"telemetry",
            {{"x", t.x},
             {"y", t.y},
             {"z", t.z},
             {"theta", t.theta},
             {"force", t.force},
             {"x_c", t.x_c},
             {"d_c", t.d_c},
             {"theta_c", t.theta_c},
             {"degenerate", t.degenerate},
             {"correction", t.correction},
             {"target", opt(t.target)},
             {"dice", opt(t.dice)}}},
           {"intent",
            {{"target", opt(record.intent_target)},
             {"evidence", evidence},
             {"dwell", record.dwell},
             {"challenger", opt(record.challenger)},
             {"switched", record.switched}}},
           {"candidates", candidates},
           {"attention_kind", to_string(record.attention_kind)},
           {"frame", pack_image(products.frame.intensity)},
           {"attention", pack_image(products.attention.values)},
           {"confidence", pack_image(products.confidence.confidence)}};
  if (const Candidate* sel = products.segmentation.selected_candidate()) {
    out["mask"] = pack_mask(sel->mask);
  } else {
    out["mask"] = nullptr;
  }
  return out;
}

json pack_image(const Image& image) {
  std::vector<std::uint8_t> pixels(image.size());
  const auto v = image.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(v[i], 0.0, 1.0) * 255.0));
  }
  return pack_bytes(pixels, image.width(), image.height());
}

json pack_mask(const Mask& mask) {
  std::vector<std::uint8_t> pixels(mask.values().begin(), mask.values().end());
  for (auto& p : pixels) {
    p = p ? 255 : 0;
  }
  return pack_bytes(pixels, mask.width(), mask.height());
}

Grid<std::uint8_t> unpack_image(const json& packed) {
  const int w = packed.at("width").get<int>();
  const int h = packed.at("height").get<int>();
  const std::vector<std::uint8_t> compressed = base64_decode(packed.at("data").get<std::string>());
  Grid<std::uint8_t> out(w, h, 0);
  uLongf size = static_cast<uLongf>(out.size());
  if (uncompress(out.values().data(), &size, compressed.data(), static_cast<uLong>(compressed.size())) != Z_OK ||
      size != out.size()) {
    throw ProtocolError("corrupt image payload");
  }
  return out;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back(kAlphabet[v & 63]);
  }
  if (i < bytes.size()) {
    std::uint32_t v = bytes[i] << 16;
    if (i + 1 < bytes.size()) {
      v |= bytes[i + 1] << 8;
    }
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(i + 1 < bytes.size() ? kAlphabet[(v >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) {
    throw ProtocolError("base64 length must be a multiple of 4");
  }
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    const int pad = (text[i + 3] == '=') + (text[i + 2] == '=');
    if (pad > 0 && i + 4 != text.size()) {
      throw ProtocolError("base64 padding inside the payload");
    }
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + static_cast<std::size_t>(k)];
      const int d = (c == '=' && k >= 4 - pad) ? 0 : value(c);
      if (d < 0) {
        throw ProtocolError("invalid base64 character");
      }
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) {
      out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    }
    if (pad < 1) {
      out.push_back(static_cast<std::uint8_t>(v & 0xff));
    }
  }
  return out;
}

}  // namespace sonoloop::protocol
