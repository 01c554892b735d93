#include "sonoloop/image_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

namespace sonoloop {

namespace {

constexpr std::array<char, 8> kRawMagic{'S', 'L', 'R', 'A', 'W', '0', '0', '1'};

static_assert(std::endian::native == std::endian::little, "raw dumps assume a little-endian host");

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof value)) {
    throw std::runtime_error("truncated raw dump: " + path.string());
  }
  return value;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  return out;
}

}  // namespace

void write_raw(const std::filesystem::path& path, const Image& values, double pixel_pitch) {
  auto out = open_out(path);
  out.write(kRawMagic.data(), kRawMagic.size());
  put(out, static_cast<std::uint32_t>(values.width()));
  put(out, static_cast<std::uint32_t>(values.height()));
  put(out, pixel_pitch);
  const auto data = values.values();
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

RawGrid read_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open: " + path.string());
  }
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kRawMagic) {
    throw std::runtime_error("not a raw dump: " + path.string());
  }
  const auto width = get<std::uint32_t>(in, path);
  const auto height = get<std::uint32_t>(in, path);
  RawGrid raw;
  raw.pixel_pitch = get<double>(in, path);
  raw.values = Image(static_cast<int>(width), static_cast<int>(height));
  auto data = raw.values.values();
  if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()))) {
    throw std::runtime_error("truncated raw dump: " + path.string());
  }
  return raw;
}

std::vector<std::uint8_t> to_gray8(const Image& values, double lo, double hi) {
  std::vector<std::uint8_t> out(values.size());
  const double span = hi - lo;
  std::transform(values.values().begin(), values.values().end(), out.begin(), [&](double v) {
    const double t = span > 0.0 ? std::clamp((v - lo) / span, 0.0, 1.0) : 0.0;
    return static_cast<std::uint8_t>(std::lround(t * 255.0));
  });
  return out;
}

std::vector<std::uint8_t> to_gray8(const Mask& mask) {
  std::vector<std::uint8_t> out(mask.size());
  std::transform(mask.values().begin(), mask.values().end(), out.begin(),
                 [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
  return out;
}

void write_pgm(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw DomainError("write_pgm: pixel count does not match dimensions");
  }
  auto out = open_out(path);
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_pgm(const std::filesystem::path& path, const Image& values, double lo, double hi) {
  write_pgm(path, values.width(), values.height(), to_gray8(values, lo, hi));
}

void write_pgm(const std::filesystem::path& path, const Mask& mask) {
  write_pgm(path, mask.width(), mask.height(), to_gray8(mask));
}

Grid<std::uint8_t> read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open: " + path.string());
  }
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (magic != "P5" || width <= 0 || height <= 0 || maxval != 255) {
    throw std::runtime_error("unsupported PGM: " + path.string());
  }
  in.get();  // single whitespace after the header
  Grid<std::uint8_t> out(width, height);
  auto data = out.values();
  if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()))) {
    throw std::runtime_error("truncated PGM: " + path.string());
  }
  return out;
}

}  // namespace sonoloop
