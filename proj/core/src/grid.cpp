#include "sonoloop/grid.hpp"

#include <cstring>
#include <sstream>

namespace sonoloop {

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::ostringstream out;
  out << "invalid scenario";
  for (const auto& issue : issues) {
    out << "\n  " << issue;
  }
  return out.str();
}

template <typename T>
std::uint64_t fnv1a(std::span<const T> values, int width, int height) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  auto feed = [&hash](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash ^= bytes[i];
      hash *= 0x100000001b3ULL;
    }
  };
  feed(&width, sizeof width);
  feed(&height, sizeof height);
  feed(values.data(), values.size_bytes());
  return hash;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

void ImageGeometry::validate() const {
  if (width_px <= 0 || depth_px <= 0) {
    throw DomainError("image geometry: width and depth must be positive");
  }
  if (!(pixel_pitch > 0.0)) {
    throw DomainError("image geometry: pixel pitch must be positive");
  }
}

std::size_t count_set(const Mask& mask) {
  std::size_t n = 0;
  for (auto v : mask.values()) {
    n += v != 0;
  }
  return n;
}

PixelPoint mask_centroid(const Mask& mask) {
  double sx = 0.0;
  double sy = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < mask.height(); ++y) {
    const auto row = mask.row(y);
    for (int x = 0; x < mask.width(); ++x) {
      if (row[static_cast<std::size_t>(x)]) {
        sx += x;
        sy += y;
        ++n;
      }
    }
  }
  if (n == 0) {
    throw DomainError("centroid of an empty mask");
  }
  return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

std::uint64_t digest(const Image& image) { return fnv1a(image.values(), image.width(), image.height()); }

std::uint64_t digest(const Mask& mask) { return fnv1a(mask.values(), mask.width(), mask.height()); }

}  // namespace sonoloop
