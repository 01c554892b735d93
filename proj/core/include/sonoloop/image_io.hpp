#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sonoloop/grid.hpp"

namespace sonoloop {

/// Raw scalar dump: 8-byte magic "SLRAW001", uint32 width, uint32 depth,
/// float64 pixel pitch, then width*depth float64 values in row-major order.
/// Everything little-endian. Round-trips bit-exactly.
struct RawGrid {
  Image values;
  double pixel_pitch = 0.0;
};

void write_raw(const std::filesystem::path& path, const Image& values, double pixel_pitch);
RawGrid read_raw(const std::filesystem::path& path);

/// Maps [lo, hi] onto 0..255 with rounding; values outside are clamped.
std::vector<std::uint8_t> to_gray8(const Image& values, double lo = 0.0, double hi = 1.0);
std::vector<std::uint8_t> to_gray8(const Mask& mask);

/// Binary PGM (P5, maxval 255).
void write_pgm(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& pixels);
void write_pgm(const std::filesystem::path& path, const Image& values, double lo = 0.0, double hi = 1.0);
void write_pgm(const std::filesystem::path& path, const Mask& mask);
Grid<std::uint8_t> read_pgm(const std::filesystem::path& path);

}  // namespace sonoloop
