#include "sonoloop/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "sonoloop/errors.hpp"

namespace sonoloop {

namespace {

template <typename Op>
Mask square_filter(const Mask& mask, int radius, Op op, std::uint8_t identity) {
  if (radius <= 0) {
    return mask;
  }
  const int w = mask.width();
  const int h = mask.height();
  Mask tmp(w, h);
  Mask out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t acc = identity;
      for (int k = std::max(0, x - radius); k <= std::min(w - 1, x + radius); ++k) {
        acc = op(acc, mask(k, y));
      }
      tmp(x, y) = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t acc = identity;
      for (int k = std::max(0, y - radius); k <= std::min(h - 1, y + radius); ++k) {
        acc = op(acc, tmp(x, k));
      }
      out(x, y) = acc;
    }
  }
  return out;
}

Image box_mean(const Image& values, int side) {
  Image ones(values.width(), values.height(), 1.0);
  Image sums = box_diffuse(values, side);
  const Image counts = box_diffuse(ones, side);
  for (std::size_t i = 0; i < sums.size(); ++i) {
    sums.values()[i] /= counts.values()[i];
  }
  return sums;
}

double median_of(std::vector<double>& v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) {
    return *mid;
  }
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

double score_over(const Mask& region, const Image& attention) {
  double s = 0.0;
  for (std::size_t i = 0; i < region.size(); ++i) {
    if (region.values()[i]) {
      s += attention.values()[i];
    }
  }
  return s;
}

}  // namespace

SegmentationParams SegmentationParams::for_geometry(const ImageGeometry& geom) {
  geom.validate();
  SegmentationParams p;
  const double r_min = 1.0 / geom.pixel_pitch;
  const double r_max = 5.0 / geom.pixel_pitch;
  p.min_area = static_cast<int>(std::floor(std::numbers::pi * r_min * r_min));
  p.max_area = static_cast<int>(std::ceil(std::numbers::pi * r_max * r_max));
  return p;
}

Mask erode_square(const Mask& mask, int radius) {
  return square_filter(mask, radius, [](std::uint8_t a, std::uint8_t b) { return std::min(a, b); }, 1);
}

Mask dilate_square(const Mask& mask, int radius) {
  return square_filter(mask, radius, [](std::uint8_t a, std::uint8_t b) { return std::max(a, b); }, 0);
}

Mask dilate(const Mask& mask, int radius) {
  if (radius <= 0) {
    return mask;
  }
  std::vector<PixelIndex> disk;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) {
        disk.push_back({dx, dy});
      }
    }
  }
  const int w = mask.width();
  const int h = mask.height();
  Mask out = mask;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) {
        continue;
      }
      const bool interior = x > 0 && y > 0 && x < w - 1 && y < h - 1 && mask(x - 1, y) && mask(x + 1, y) &&
                            mask(x, y - 1) && mask(x, y + 1);
      if (interior) {
        continue;
      }
      for (const auto& o : disk) {
        const int qx = x + o.x;
        const int qy = y + o.y;
        if (qx >= 0 && qy >= 0 && qx < w && qy < h) {
          out(qx, qy) = 1;
        }
      }
    }
  }
  return out;
}

Grid<int> label_components(const Mask& mask, int* count) {
  const int w = mask.width();
  const int h = mask.height();
  Grid<int> labels(w, h, 0);
  int next = 0;
  std::vector<PixelIndex> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y) || labels(x, y) != 0) {
        continue;
      }
      ++next;
      labels(x, y) = next;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const PixelIndex p = stack.back();
        stack.pop_back();
        const PixelIndex nbrs[4] = {{p.x - 1, p.y}, {p.x + 1, p.y}, {p.x, p.y - 1}, {p.x, p.y + 1}};
        for (const auto& q : nbrs) {
          if (mask.contains(q.x, q.y) && mask(q.x, q.y) && labels(q.x, q.y) == 0) {
            labels(q.x, q.y) = next;
            stack.push_back(q);
          }
        }
      }
    }
  }
  if (count) {
    *count = next;
  }
  return labels;
}

double eccentricity(const Mask& mask) {
  double n = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask(x, y)) {
        n += 1.0;
        sx += x;
        sy += y;
        sxx += static_cast<double>(x) * x;
        syy += static_cast<double>(y) * y;
        sxy += static_cast<double>(x) * y;
      }
    }
  }
  if (n < 2.0) {
    return 0.0;
  }
  const double mx = sx / n;
  const double my = sy / n;
  const double cxx = sxx / n - mx * mx;
  const double cyy = syy / n - my * my;
  const double cxy = sxy / n - mx * my;
  const double mean = 0.5 * (cxx + cyy);
  const double spread = std::sqrt(0.25 * (cxx - cyy) * (cxx - cyy) + cxy * cxy);
  const double big = mean + spread;
  const double small = std::max(0.0, mean - spread);
  if (!(big > 0.0)) {
    return 0.0;
  }
  return std::sqrt(std::max(0.0, 1.0 - small / big));
}

std::vector<Candidate> detect_candidates(const BModeFrame& frame, const ConfidenceMap& cmap,
                                         const SegmentationParams& params) {
  const Image& img = frame.intensity;
  if (!img.same_shape(cmap.confidence)) {
    throw DomainError("detect_candidates: confidence map does not match the frame");
  }
  const int w = img.width();
  const int h = img.height();
  const Image smooth = box_mean(img, std::max(1, params.smoothing));

  Mask dark(w, h);
  std::vector<double> row_values;
  row_values.reserve(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    row_values.clear();
    for (int x = 0; x < w; ++x) {
      if (cmap.confidence(x, y) >= params.confidence_gate) {
        row_values.push_back(smooth(x, y));
      }
    }
    if (static_cast<int>(row_values.size()) < params.min_row_support) {
      continue;
    }
    const double reference = median_of(row_values);
    if (reference < params.min_reference) {
      continue;
    }
    const double threshold = params.dark_ratio * reference;
    for (int x = 0; x < w; ++x) {
      if (cmap.confidence(x, y) >= params.confidence_gate && smooth(x, y) < threshold) {
        dark(x, y) = 1;
      }
    }
  }

  const int r = params.morph_radius;
  Mask cleaned = dilate_square(erode_square(dark, r), r);
  cleaned = erode_square(dilate_square(cleaned, r), r);

  int count = 0;
  const Grid<int> labels = label_components(cleaned, &count);
  std::vector<Mask> masks(static_cast<std::size_t>(count), Mask(w, h));
  std::vector<int> areas(static_cast<std::size_t>(count), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (const int l = labels(x, y); l > 0) {
        masks[static_cast<std::size_t>(l - 1)](x, y) = 1;
        ++areas[static_cast<std::size_t>(l - 1)];
      }
    }
  }

  std::vector<Candidate> out;
  for (int i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    if (areas[idx] < params.min_area || areas[idx] > params.max_area) {
      continue;
    }
    if (eccentricity(masks[idx]) > params.max_eccentricity) {
      continue;
    }
    Candidate c;
    c.centroid = mask_centroid(masks[idx]);
    c.area = areas[idx];
    c.mask = std::move(masks[idx]);
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Candidate& a, const Candidate& b) { return a.centroid.x < b.centroid.x; });
  return out;
}

std::vector<Candidate> detect_candidates(const BModeFrame& frame, const SegmentationParams& params) {
  return detect_candidates(frame, confidence_map(frame), params);
}

SegmentationResult select_target(std::vector<Candidate> candidates, const AttentionHeatmap& attention,
                                 const SegmentationParams& params) {
  SegmentationResult result;
  result.candidates = std::move(candidates);
  result.attention_used = attention.kind;
  for (const auto& c : result.candidates) {
    if (c.mask.width() != attention.values.width() || c.mask.height() != attention.values.height()) {
      throw DomainError("select_target: attention heatmap does not match the candidate masks");
    }
  }
  if (attention.kind == HeatmapKind::zero || result.candidates.empty()) {
    return result;
  }

  const PixelIndex peak = argmax(attention.values);
  double best_score = -1.0;
  double best_distance = std::numeric_limits<double>::infinity();
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < result.candidates.size(); ++i) {
    const auto& c = result.candidates[i];
    const double score = score_over(dilate(c.mask, params.dilation_px), attention.values);
    const double distance = std::hypot(c.centroid.x - peak.x, c.centroid.y - peak.y);
    if (score > best_score || (score == best_score && distance < best_distance)) {
      best_score = score;
      best_distance = distance;
      best = i;
    }
  }
  result.selection_score = best_score;
  if (best_score < params.min_selection_score) {
    result.attention_used = HeatmapKind::zero;
    return result;
  }
  result.selected = best;
  return result;
}

SegmentationResult segment(const BModeFrame& frame, const AttentionHeatmap& attention,
                           const SegmentationParams& params) {
  if (frame.geometry.width_px != attention.geometry.width_px ||
      frame.geometry.depth_px != attention.geometry.depth_px ||
      !attention.values.same_shape(frame.intensity)) {
    throw DomainError("segment: frame and attention heatmap geometries differ");
  }
  return select_target(detect_candidates(frame, params), attention, params);
}

double dice(const Mask& a, const Mask& b) {
  if (!a.same_shape(b)) {
    throw DomainError("dice: mask shapes differ");
  }
  std::size_t na = 0;
  std::size_t nb = 0;
  std::size_t both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a.values()[i] != 0;
    const bool y = b.values()[i] != 0;
    na += x;
    nb += y;
    both += x && y;
  }
  if (na + nb == 0) {
    return 1.0;
  }
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

void CandidateTracker::assign(std::vector<Candidate>& candidates) {
  struct Pair {
    double distance;
    std::size_t track;
    std::size_t candidate;
  };
  std::vector<Pair> pairs;
  for (std::size_t t = 0; t < tracks_.size(); ++t) {
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const double d = std::hypot(tracks_[t].centroid.x - candidates[c].centroid.x,
                                  tracks_[t].centroid.y - candidates[c].centroid.y);
      if (d <= gate_px_) {
        pairs.push_back({d, t, c});
      }
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.distance < b.distance; });

  std::vector<char> track_used(tracks_.size(), 0);
  std::vector<char> cand_used(candidates.size(), 0);
  for (const auto& p : pairs) {
    if (track_used[p.track] || cand_used[p.candidate]) {
      continue;
    }
    track_used[p.track] = 1;
    cand_used[p.candidate] = 1;
    candidates[p.candidate].track_id = tracks_[p.track].id;
    tracks_[p.track].centroid = candidates[p.candidate].centroid;
    tracks_[p.track].missed = 0;
  }
  for (std::size_t t = 0; t < tracks_.size(); ++t) {
    if (!track_used[t]) {
      ++tracks_[t].missed;
    }
  }
  std::erase_if(tracks_, [this](const Track& t) { return t.missed > max_missed_; });
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (!cand_used[c]) {
      candidates[c].track_id = next_id_;
      tracks_.push_back({next_id_, candidates[c].centroid, 0});
      ++next_id_;
    }
  }
}

void CandidateTracker::reset() {
  tracks_.clear();
  next_id_ = 1;
}

}  // namespace sonoloop
