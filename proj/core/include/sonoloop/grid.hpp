#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sonoloop/errors.hpp"

namespace sonoloop {

/// Pixel layout of the imaging plane {I}. Column 0 is the left end of the
/// transducer, row 0 touches the transducer face. The face center sits at
/// column (width_px - 1) / 2, row 0.
struct ImageGeometry {
  int width_px = 256;
  int depth_px = 256;
  double pixel_pitch = 0.15;  // mm per pixel

  double center_column() const noexcept { return 0.5 * (width_px - 1); }
  double width_mm() const noexcept { return width_px * pixel_pitch; }
  double depth_mm() const noexcept { return depth_px * pixel_pitch; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_px) * static_cast<std::size_t>(depth_px);
  }

  /// Throws DomainError unless sizes and pitch are positive.
  void validate() const;

  bool operator==(const ImageGeometry&) const = default;
};

/// Row-major 2D grid; x is the column, y the row.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)), fill) {
    if (width < 0 || height < 0) {
      throw DomainError("Grid: negative dimensions");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }

  std::span<T> row(int y) noexcept { return {data_.data() + index(0, y), static_cast<std::size_t>(width_)}; }
  std::span<const T> row(int y) const noexcept {
    return {data_.data() + index(0, y), static_cast<std::size_t>(width_)};
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool same_shape(const Grid& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Image = Grid<double>;
using Mask = Grid<std::uint8_t>;

inline Image make_image(const ImageGeometry& geom, double fill = 0.0) {
  return Image(geom.width_px, geom.depth_px, fill);
}

inline Mask make_mask(const ImageGeometry& geom) { return Mask(geom.width_px, geom.depth_px, 0); }

std::size_t count_set(const Mask& mask);

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const PixelPoint&) const = default;
};

/// Mean pixel coordinate of the set pixels. Throws DomainError on an empty mask.
PixelPoint mask_centroid(const Mask& mask);

/// FNV-1a over the raw bytes of the grid, used as a frame digest in run records.
std::uint64_t digest(const Image& image);
std::uint64_t digest(const Mask& mask);

}  // namespace sonoloop
