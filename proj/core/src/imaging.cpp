#include "sonoloop/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sonoloop/errors.hpp"
#include "sonoloop/random.hpp"

namespace sonoloop {

namespace {

struct FaceSample {
  double world_x;
  double face_z_offset;  // u * sin(theta)
};

FaceSample face_sample(const ProbeState& probe, const ImageGeometry& geom, int column) {
  const double u = (column - geom.center_column()) * geom.pixel_pitch;
  return {probe.x + u * std::cos(probe.theta), u * std::sin(probe.theta)};
}

// Truncation keeps the speckle bounded so the default base intensity never clips.
constexpr double kSpeckleCap = 2.5;

}  // namespace

ContactGeometry compute_contact(const SurfaceProfile& surface, const ProbeState& probe, const ImageGeometry& geom,
                                double coupling_threshold_mm) {
  geom.validate();
  ContactGeometry out;
  out.model.coupling_threshold_mm = coupling_threshold_mm;
  out.model.gap_mm.resize(static_cast<std::size_t>(geom.width_px));
  double deepest = 0.0;
  for (int c = 0; c < geom.width_px; ++c) {
    const FaceSample f = face_sample(probe, geom, c);
    double gap = std::numeric_limits<double>::infinity();
    if (surface.contains(f.world_x, probe.y)) {
      const double raw = probe.z + f.face_z_offset - surface.height(f.world_x, probe.y);
      deepest = std::max(deepest, -raw);
      gap = std::max(0.0, raw);
    }
    out.model.gap_mm[static_cast<std::size_t>(c)] = gap;
  }
  out.penetration_mm = deepest;
  return out;
}

double seat_elevation(const SurfaceProfile& surface, const ProbeState& probe, const ImageGeometry& geom,
                      double penetration_mm) {
  geom.validate();
  double touch = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < geom.width_px; ++c) {
    const FaceSample f = face_sample(probe, geom, c);
    if (surface.contains(f.world_x, probe.y)) {
      touch = std::max(touch, surface.height(f.world_x, probe.y) - f.face_z_offset);
    }
  }
  if (!std::isfinite(touch)) {
    throw DomainError("probe face lies entirely outside the surface extent");
  }
  return touch - penetration_mm;
}

ContactModel full_contact(const ImageGeometry& geom, double coupling_threshold_mm) {
  ContactModel model;
  model.coupling_threshold_mm = coupling_threshold_mm;
  model.gap_mm.assign(static_cast<std::size_t>(geom.width_px), 0.0);
  return model;
}

BModeFrame render_bmode(const CrossSection& cs, const ContactModel& contact, const ImageGeometry& geom,
                        std::uint64_t seed, const RenderParams& params) {
  geom.validate();
  if (contact.gap_mm.size() != static_cast<std::size_t>(geom.width_px)) {
    throw DomainError("render_bmode: contact model width does not match the image");
  }
  BModeFrame frame{make_image(geom), geom, seed};

  Mask lumen = make_mask(geom);
  for (const auto& label : rasterize_labels(cs, geom)) {
    for (std::size_t i = 0; i < lumen.size(); ++i) {
      lumen.values()[i] |= label.mask.values()[i];
    }
  }

  std::vector<char> coupled(static_cast<std::size_t>(geom.width_px));
  for (int c = 0; c < geom.width_px; ++c) {
    coupled[static_cast<std::size_t>(c)] = contact.coupled(c);
  }

  Rng rng(seed);
  const double rayleigh_scale = std::sqrt(2.0 / std::numbers::pi);  // unit mean
  const double s = std::clamp(params.speckle, 0.0, 1.0);
  std::vector<double> noise(static_cast<std::size_t>(geom.width_px));

  for (int r = 0; r < geom.depth_px; ++r) {
    double sum = 0.0;
    for (auto& n : noise) {
      n = (1.0 - s) + s * std::min(rng.rayleigh(rayleigh_scale), kSpeckleCap);
      sum += n;
    }
    const double mean = sum / static_cast<double>(noise.size());
    const double depth = r * geom.pixel_pitch;
    const double tissue = params.base_intensity * std::exp(-params.attenuation_per_mm * depth);
    const double shadow = params.shadow_gain * tissue * std::exp(-depth / params.reverberation_mm);
    auto out = frame.intensity.row(r);
    const auto in_lumen = lumen.row(r);
    for (int c = 0; c < geom.width_px; ++c) {
      const auto i = static_cast<std::size_t>(c);
      const double speckle = mean > 0.0 ? noise[i] / mean : 1.0;
      double v = coupled[i] ? tissue * (in_lumen[i] ? params.lumen_gain : 1.0) : shadow;
      out[i] = std::clamp(v * speckle, 0.0, 1.0);
    }
  }
  return frame;
}

ConfidenceMap confidence_map(const BModeFrame& frame) {
  const Image& img = frame.intensity;
  const int w = img.width();
  const int h = img.height();
  ConfidenceMap out{Image(w, h), frame.geometry};

  std::vector<double> total(static_cast<std::size_t>(w), 0.0);
  for (int y = 0; y < h; ++y) {
    const auto row = img.row(y);
    for (int x = 0; x < w; ++x) {
      const double v = row[static_cast<std::size_t>(x)];
      total[static_cast<std::size_t>(x)] += v * v;
    }
  }

  std::vector<double> running(static_cast<std::size_t>(w), 0.0);
  for (int y = 0; y < h; ++y) {
    const auto row = img.row(y);
    auto c = out.confidence.row(y);
    for (int x = 0; x < w; ++x) {
      const auto i = static_cast<std::size_t>(x);
      if (total[i] > 0.0) {
        c[i] = 1.0 - running[i] / total[i];
      } else {
        c[i] = y == 0 ? 1.0 : 0.0;
      }
      const double v = row[i];
      running[i] += v * v;
    }
  }
  return out;
}

}  // namespace sonoloop
