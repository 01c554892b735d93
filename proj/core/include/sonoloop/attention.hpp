#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "sonoloop/grid.hpp"

namespace sonoloop {

struct GazeSample {
  double x = 0.0;  // image px, may be off-image
  double y = 0.0;
  std::int64_t t = 0;  // tick index
  bool valid = true;

  bool operator==(const GazeSample&) const = default;
};

/// Diagonal covariance in px^2.
struct DiagonalCovariance {
  double xx = 0.0;
  double yy = 0.0;

  static DiagonalCovariance from_stddev(double sigma) { return {sigma * sigma, sigma * sigma}; }
  bool operator==(const DiagonalCovariance&) const = default;
};

struct HeatmapParams {
  DiagonalCovariance centroid_cov = DiagonalCovariance::from_stddev(15.0);
  DiagonalCovariance spread_cov = DiagonalCovariance::from_stddev(25.0);
  int points = 200;
  int kernel = 30;
  double zero_fraction = 0.10;

  /// Throws DomainError on negative variances, points < 1 or kernel < 1.
  void validate() const;

  bool operator==(const HeatmapParams&) const = default;
};

enum class HeatmapKind { pseudo, raw_gaze, stabilized, zero };

const char* to_string(HeatmapKind kind);

struct AttentionHeatmap {
  Image values;
  HeatmapKind kind = HeatmapKind::zero;
  ImageGeometry geometry;
};

/// K x K all-ones convolution with zero padding. An impulse at p spreads over
/// [p - K/2, p - K/2 + K - 1] on both axes. Separable running sums.
Image box_diffuse(const Image& impulses, int kernel);

/// Divides by the maximum when it is positive; returns whether it was.
bool normalize_max(Image& values);

/// Heatmap from N Gaussian samples around `center` (spread_cov), diffused and
/// max-normalized. Samples falling off the image are clamped to the border.
AttentionHeatmap diffused_heatmap(PixelPoint center, const ImageGeometry& geom, const HeatmapParams& params,
                                  std::uint64_t seed, HeatmapKind kind);

/// Pseudo attention from a label: the heatmap center is drawn around the label
/// centroid with centroid_cov, then diffused_heatmap. Throws DomainError on an
/// empty label.
AttentionHeatmap generate_pseudo_heatmap(const Mask& label, const HeatmapParams& params, std::uint64_t seed,
                                         double pixel_pitch = 0.15);

/// Training-time variant: with probability zero_fraction the result is a zero map.
AttentionHeatmap sample_training_heatmap(const Mask& label, const HeatmapParams& params, std::uint64_t seed,
                                         double pixel_pitch = 0.15);

/// Valid in-bounds samples accumulate (repeat hits add), then diffuse and normalize.
AttentionHeatmap gaze_to_heatmap(std::span<const GazeSample> window, const HeatmapParams& params,
                                 const ImageGeometry& geom);

AttentionHeatmap zero_heatmap(const ImageGeometry& geom);

struct PixelIndex {
  int x = 0;
  int y = 0;
  bool operator==(const PixelIndex&) const = default;
};

/// First maximum in row-major order.
PixelIndex argmax(const Image& values);

/// Line-delimited gaze records "t,x,y,valid" (valid is 0 or 1). Blank lines and
/// lines starting with '#' are ignored.
std::vector<GazeSample> read_gaze_stream(std::istream& in);
std::vector<GazeSample> read_gaze_stream(const std::filesystem::path& path);
void write_gaze_stream(std::ostream& out, std::span<const GazeSample> samples);

}  // namespace sonoloop
