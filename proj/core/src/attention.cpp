#include "sonoloop/attention.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "sonoloop/errors.hpp"
#include "sonoloop/random.hpp"

namespace sonoloop {

namespace {

PixelIndex clamp_to_image(double x, double y, const ImageGeometry& geom) {
  return {std::clamp(static_cast<int>(std::lround(x)), 0, geom.width_px - 1),
          std::clamp(static_cast<int>(std::lround(y)), 0, geom.depth_px - 1)};
}

}  // namespace

void HeatmapParams::validate() const {
  if (centroid_cov.xx < 0.0 || centroid_cov.yy < 0.0 || spread_cov.xx < 0.0 || spread_cov.yy < 0.0) {
    throw DomainError("heatmap covariance entries must be non-negative");
  }
  if (points < 1) {
    throw DomainError("heatmap point count must be at least 1");
  }
  if (kernel < 1) {
    throw DomainError("heatmap kernel size must be at least 1");
  }
  if (zero_fraction < 0.0 || zero_fraction > 1.0) {
    throw DomainError("heatmap zero fraction must lie in [0, 1]");
  }
}

const char* to_string(HeatmapKind kind) {
  switch (kind) {
    case HeatmapKind::pseudo:
      return "pseudo";
    case HeatmapKind::raw_gaze:
      return "raw_gaze";
    case HeatmapKind::stabilized:
      return "stabilized";
    case HeatmapKind::zero:
      return "zero";
  }
  return "zero";
}

Image box_diffuse(const Image& impulses, int kernel) {
  if (kernel < 1) {
    throw DomainError("box_diffuse: kernel must be at least 1");
  }
  const int w = impulses.width();
  const int h = impulses.height();
  const int anchor = kernel / 2;
  // Output q sums inputs [q + anchor - kernel + 1, q + anchor], via prefix sums.
  auto span_of = [&](int q, int n) {
    return std::pair{std::max(0, q + anchor - kernel + 1), std::min(n - 1, q + anchor)};
  };

  // Row prefix sums, then the horizontal box; rows are stored as prefix rows for
  // the vertical pass so both passes walk memory contiguously.
  std::vector<double> prefix(static_cast<std::size_t>(w) + 1);
  std::vector<double> rows(static_cast<std::size_t>(h + 1) * static_cast<std::size_t>(w), 0.0);
  for (int y = 0; y < h; ++y) {
    const auto in = impulses.row(y);
    for (int x = 0; x < w; ++x) {
      prefix[static_cast<std::size_t>(x) + 1] = prefix[static_cast<std::size_t>(x)] + in[static_cast<std::size_t>(x)];
    }
    const double* above = rows.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(w);
    double* cum = rows.data() + static_cast<std::size_t>(y + 1) * static_cast<std::size_t>(w);
    for (int x = 0; x < w; ++x) {
      const auto [lo, hi] = span_of(x, w);
      const double v = lo <= hi ? prefix[static_cast<std::size_t>(hi) + 1] - prefix[static_cast<std::size_t>(lo)] : 0.0;
      cum[x] = above[x] + v;
    }
  }
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    const auto [lo, hi] = span_of(y, h);
    auto dst = out.row(y);
    if (lo > hi) {
      continue;
    }
    const double* top = rows.data() + static_cast<std::size_t>(lo) * static_cast<std::size_t>(w);
    const double* bottom = rows.data() + static_cast<std::size_t>(hi + 1) * static_cast<std::size_t>(w);
    for (int x = 0; x < w; ++x) {
      dst[static_cast<std::size_t>(x)] = bottom[x] - top[x];
    }
  }
  return out;
}

bool normalize_max(Image& values) {
  double peak = 0.0;
  for (double v : values.values()) {
    peak = std::max(peak, v);
  }
  if (!(peak > 0.0)) {
    return false;
  }
  for (double& v : values.values()) {
    v /= peak;
  }
  return true;
}

AttentionHeatmap diffused_heatmap(PixelPoint center, const ImageGeometry& geom, const HeatmapParams& params,
                                  std::uint64_t seed, HeatmapKind kind) {
  geom.validate();
  params.validate();
  Rng rng(seed);
  const double sx = std::sqrt(params.spread_cov.xx);
  const double sy = std::sqrt(params.spread_cov.yy);
  Image impulses = make_image(geom);
  for (int i = 0; i < params.points; ++i) {
    const double x = center.x + sx * rng.normal();
    const double y = center.y + sy * rng.normal();
    const PixelIndex p = clamp_to_image(x, y, geom);
    impulses(p.x, p.y) = 1.0;
  }
  AttentionHeatmap out{box_diffuse(impulses, params.kernel), kind, geom};
  normalize_max(out.values);
  return out;
}

AttentionHeatmap generate_pseudo_heatmap(const Mask& label, const HeatmapParams& params, std::uint64_t seed,
                                         double pixel_pitch) {
  const ImageGeometry geom{label.width(), label.height(), pixel_pitch};
  const PixelPoint centroid = mask_centroid(label);
  Rng rng(mix_seed(seed, 0));
  const PixelPoint center{centroid.x + std::sqrt(params.centroid_cov.xx) * rng.normal(),
                          centroid.y + std::sqrt(params.centroid_cov.yy) * rng.normal()};
  return diffused_heatmap(center, geom, params, mix_seed(seed, 1), HeatmapKind::pseudo);
}

AttentionHeatmap sample_training_heatmap(const Mask& label, const HeatmapParams& params, std::uint64_t seed,
                                         double pixel_pitch) {
  Rng rng(mix_seed(seed, 2));
  if (rng.uniform() < params.zero_fraction) {
    return zero_heatmap({label.width(), label.height(), pixel_pitch});
  }
  return generate_pseudo_heatmap(label, params, seed, pixel_pitch);
}

AttentionHeatmap gaze_to_heatmap(std::span<const GazeSample> window, const HeatmapParams& params,
                                 const ImageGeometry& geom) {
  geom.validate();
  Image impulses = make_image(geom);
  bool any = false;
  for (const auto& s : window) {
    if (!s.valid || !std::isfinite(s.x) || !std::isfinite(s.y)) {
      continue;
    }
    const auto x = std::lround(s.x);
    const auto y = std::lround(s.y);
    if (x < 0 || y < 0 || x >= geom.width_px || y >= geom.depth_px) {
      continue;
    }
    impulses(static_cast<int>(x), static_cast<int>(y)) += 1.0;
    any = true;
  }
  if (!any) {
    return zero_heatmap(geom);
  }
  AttentionHeatmap out{box_diffuse(impulses, params.kernel), HeatmapKind::raw_gaze, geom};
  normalize_max(out.values);
  return out;
}

AttentionHeatmap zero_heatmap(const ImageGeometry& geom) {
  geom.validate();
  return {make_image(geom), HeatmapKind::zero, geom};
}

PixelIndex argmax(const Image& values) {
  PixelIndex best;
  double peak = -std::numeric_limits<double>::infinity();
  for (int y = 0; y < values.height(); ++y) {
    const auto row = values.row(y);
    for (int x = 0; x < values.width(); ++x) {
      if (row[static_cast<std::size_t>(x)] > peak) {
        peak = row[static_cast<std::size_t>(x)];
        best = {x, y};
      }
    }
  }
  return best;
}

std::vector<GazeSample> read_gaze_stream(std::istream& in) {
  std::vector<GazeSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') {
      continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    GazeSample s;
    int valid = 0;
    if (!(fields >> s.t >> s.x >> s.y >> valid) || (valid != 0 && valid != 1)) {
      throw DomainError("gaze stream line " + std::to_string(lineno) + ": expected t,x,y,valid");
    }
    s.valid = valid == 1;
    if (!out.empty() && s.t < out.back().t) {
      throw DomainError("gaze stream line " + std::to_string(lineno) + ": tick index decreases");
    }
    out.push_back(s);
  }
  return out;
}

std::vector<GazeSample> read_gaze_stream(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DomainError("cannot open gaze stream " + path.string());
  }
  return read_gaze_stream(in);
}

void write_gaze_stream(std::ostream& out, std::span<const GazeSample> samples) {
  out << std::setprecision(17);
  for (const auto& s : samples) {
    out << s.t << ',' << s.x << ',' << s.y << ',' << (s.valid ? 1 : 0) << '\n';
  }
}

}  // namespace sonoloop
