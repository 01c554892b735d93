#pragma once

#include <cstdint>
#include <vector>

#include "sonoloop/grid.hpp"
#include "sonoloop/phantom.hpp"
#include "sonoloop/probe.hpp"

namespace sonoloop {

/// Per-column air gap between transducer face and skin. Columns whose gap
/// exceeds the coupling threshold carry no acoustic signal.
struct ContactModel {
  std::vector<double> gap_mm;
  double coupling_threshold_mm = 0.5;

  bool coupled(int column) const { return gap_mm.at(static_cast<std::size_t>(column)) <= coupling_threshold_mm; }
};

struct ContactGeometry {
  ContactModel model;
  double penetration_mm = 0.0;  // deepest indentation of the face into the skin
};

/// Samples the face at every column center. Face points outside the surface
/// extent get an infinite gap.
ContactGeometry compute_contact(const SurfaceProfile& surface, const ProbeState& probe, const ImageGeometry& geom,
                                double coupling_threshold_mm);

/// Elevation that makes the deepest face point indent the skin by `penetration_mm`.
double seat_elevation(const SurfaceProfile& surface, const ProbeState& probe, const ImageGeometry& geom,
                      double penetration_mm);

/// Fully coupled contact, for tests and synthetic frames.
ContactModel full_contact(const ImageGeometry& geom, double coupling_threshold_mm = 0.5);

struct RenderParams {
  double base_intensity = 0.38;
  double attenuation_per_mm = 0.03;  // amplitude decay exp(-a * depth)
  double speckle = 1.0;              // 0 = noiseless, 1 = fully developed speckle
  double lumen_gain = 0.08;          // hypoechoic lumen relative to tissue
  double shadow_gain = 0.02;         // uncoupled columns relative to tissue
  double reverberation_mm = 0.6;     // decay length of the near-field ringing in shadow

  bool operator==(const RenderParams&) const = default;
};

struct BModeFrame {
  Image intensity;  // I(x, y) in [0, 1]; x lateral column, y depth row
  ImageGeometry geometry;
  std::uint64_t seed = 0;
};

/// Speckle x depth attenuation x structures. Speckle is Rayleigh multiplicative
/// noise, renormalized to unit mean along every row so that row means follow the
/// attenuation profile exactly.
BModeFrame render_bmode(const CrossSection& cs, const ContactModel& contact, const ImageGeometry& geom,
                        std::uint64_t seed, const RenderParams& params = {});

struct ConfidenceMap {
  Image confidence;  // C(X, Y) in [0, 1]
  ImageGeometry geometry;
};

/// Scan-line confidence with f(v) = v^2:
///   C(X, Y) = 1 - sum_{y < Y} f(I(X, y)) / sum_{y} f(I(X, y))
/// Exclusive prefix, so C(X, 0) = 1. A column without energy maps to 1 at row 0
/// and 0 below.
ConfidenceMap confidence_map(const BModeFrame& frame);

}  // namespace sonoloop
