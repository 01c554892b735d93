#pragma once

#include "sonoloop/grid.hpp"
#include "sonoloop/imaging.hpp"
#include "sonoloop/phantom.hpp"
#include "sonoloop/probe.hpp"
#include "sonoloop/segmentation.hpp"

namespace sonoloop {

struct ControlParams {
  double curvature_radius_mm = 100.0;  // R
  double angular_gain = 1.0;           // 1/s
  double lateral_gain = 1.5;           // 1/s
  double scan_speed = 5.0;             // mm/s
  double stiffness = 5.0;              // N/mm
  double damping = 0.5;                // N*s/mm
  double target_force = 5.0;           // N
  double angular_deadband_mm = 0.3;
  double lateral_deadband_mm = 0.05;
  double theta_limit = 0.35;           // rad
  double coupling_threshold_mm = 0.5;
  bool correction_enabled = true;

  void validate() const;
  bool operator==(const ControlParams&) const = default;
};

/// Depth-weighted lateral centroid of the confidence map in px:
///   x_c = sum x C(x,y) y / sum C(x,y) y
/// Throws DegenerateError when the weighted mass is zero.
double confidence_centroid(const ConfidenceMap& cmap);

/// Signed lateral offset (mm) of x_c from the image centerline.
double centerline_offset(double x_c, const ImageGeometry& geom);

/// atan(d_c / R). Throws DomainError for R <= 0.
double correction_angle(double d_c, double radius_mm);

struct ControlReadout {
  double x_c = 0.0;
  double d_c = 0.0;
  double theta_c = 0.0;
  bool degenerate = false;
  std::optional<double> target_offset_mm;
};

struct StepResult {
  ProbeState probe;
  ControlReadout readout;
};

/// One servo tick:
///  - theta += k_theta * theta_c * dt outside the d_c deadband, clamped; held on
///    degenerate confidence or when correction is disabled
///  - x += k_x * (selected centroid offset, mm) * dt when a target is selected
///  - z follows a spring-damper toward target_force, F = K * penetration
///  - y += v * dt
StepResult step(const ProbeState& probe, const ConfidenceMap& cmap, const SegmentationResult& seg,
                const SurfaceProfile& surface, const ControlParams& params, double dt);

/// Measures the readout without moving the probe.
ControlReadout measure(const ConfidenceMap& cmap, const SegmentationResult& seg, const ControlParams& params);

}  // namespace sonoloop
