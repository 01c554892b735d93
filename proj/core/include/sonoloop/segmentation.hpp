#pragma once

#include <optional>
#include <vector>

#include "sonoloop/attention.hpp"
#include "sonoloop/grid.hpp"
#include "sonoloop/imaging.hpp"

namespace sonoloop {

struct Candidate {
  Mask mask;  // one 4-connected component, full image size
  PixelPoint centroid;
  int area = 0;
  std::optional<int> track_id;
};

struct SegmentationParams {
  double confidence_gate = 0.2;  // pixels below this confidence are never lumen
  int smoothing = 5;             // box filter side, px
  double dark_ratio = 0.5;       // lumen if smoothed < ratio * row reference
  double min_reference = 0.03;   // rows darker than this are skipped
  int min_row_support = 16;      // gated pixels required to form a row reference
  int morph_radius = 1;
  int min_area = 140;
  int max_area = 3490;
  double max_eccentricity = 0.9;
  int dilation_px = 8;
  double min_selection_score = 1.0;

  /// Area bounds follow lumen radii 1..5 mm at the pixel pitch.
  static SegmentationParams for_geometry(const ImageGeometry& geom);

  bool operator==(const SegmentationParams&) const = default;
};

struct SegmentationResult {
  std::vector<Candidate> candidates;
  std::optional<std::size_t> selected;
  HeatmapKind attention_used = HeatmapKind::zero;
  double selection_score = 0.0;

  const Candidate* selected_candidate() const {
    return selected ? &candidates.at(*selected) : nullptr;
  }
};

/// Confidence-gated adaptive threshold, open/close, 4-connected components,
/// area and eccentricity filters. Components are ordered by centroid column.
std::vector<Candidate> detect_candidates(const BModeFrame& frame, const ConfidenceMap& cmap,
                                         const SegmentationParams& params);
std::vector<Candidate> detect_candidates(const BModeFrame& frame, const SegmentationParams& params);

/// Attention gating over already detected candidates.
///
/// Zero attention returns all candidates with nothing selected. Otherwise the
/// candidate with the largest attention mass over its dilated mask wins; ties go
/// to the centroid nearest the attention argmax. A winning score below
/// min_selection_score falls back to the all-candidates mode.
SegmentationResult select_target(std::vector<Candidate> candidates, const AttentionHeatmap& attention,
                                  const SegmentationParams& params);

/// detect_candidates + select_target. Throws DomainError on geometry mismatch.
SegmentationResult segment(const BModeFrame& frame, const AttentionHeatmap& attention,
                           const SegmentationParams& params);

/// 2|A n B| / (|A| + |B|); two empty masks score 1. Throws DomainError on shape mismatch.
double dice(const Mask& a, const Mask& b);

/// Euclidean disk dilation.
Mask dilate(const Mask& mask, int radius);

/// Binary morphology with a (2r+1)^2 square.
Mask erode_square(const Mask& mask, int radius);
Mask dilate_square(const Mask& mask, int radius);

/// 4-connected components labeled 1..n in raster order of their first pixel.
Grid<int> label_components(const Mask& mask, int* count = nullptr);

/// sqrt(1 - lambda_min / lambda_max) of the pixel-coordinate covariance.
double eccentricity(const Mask& mask);

/// Keeps candidate identities stable across frames by greedy nearest-centroid
/// association. Unmatched tracks coast for `max_missed` frames.
class CandidateTracker {
 public:
  explicit CandidateTracker(double gate_px = 40.0, int max_missed = 30) : gate_px_(gate_px), max_missed_(max_missed) {}

  void assign(std::vector<Candidate>& candidates);
  void reset();

 private:
  struct Track {
    int id;
    PixelPoint centroid;
    int missed;
  };

  double gate_px_;
  int max_missed_;
  int next_id_ = 1;
  std::vector<Track> tracks_;
};

}  // namespace sonoloop
