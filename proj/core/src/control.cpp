#include "sonoloop/control.hpp"

#include <algorithm>
#include <cmath>

#include "sonoloop/errors.hpp"

namespace sonoloop {

void ControlParams::validate() const {
  if (!(curvature_radius_mm > 0.0)) {
    throw DomainError("control: curvature radius must be positive");
  }
  if (!(angular_gain > 0.0) || !(lateral_gain > 0.0) || !(stiffness > 0.0) || !(damping > 0.0)) {
    throw DomainError("control: gains, stiffness and damping must be positive");
  }
  if (scan_speed < 0.0 || target_force < 0.0 || angular_deadband_mm < 0.0 || lateral_deadband_mm < 0.0 ||
      !(theta_limit > 0.0) || coupling_threshold_mm < 0.0) {
    throw DomainError("control: speed, force, deadbands and limits must be non-negative");
  }
}

double confidence_centroid(const ConfidenceMap& cmap) {
  const Image& c = cmap.confidence;
  const int w = c.width();
  const double center = 0.5 * (w - 1);
  // Mirror columns are folded together so a left-right symmetric map cancels exactly.
  double offset = 0.0;
  double mass = 0.0;
  for (int y = 1; y < c.height(); ++y) {
    const auto row = c.row(y);
    for (int x = 0; x < w / 2; ++x) {
      const double left = row[static_cast<std::size_t>(x)] * y;
      const double right = row[static_cast<std::size_t>(w - 1 - x)] * y;
      offset += (x - center) * (left - right);
      mass += left + right;
    }
    if (w % 2 == 1) {
      mass += row[static_cast<std::size_t>(w / 2)] * y;
    }
  }
  if (!(mass > 0.0)) {
    throw DegenerateError("confidence map carries no depth-weighted mass");
  }
  return std::clamp(center + offset / mass, 0.0, static_cast<double>(w - 1));
}

double centerline_offset(double x_c, const ImageGeometry& geom) {
  return (x_c - geom.center_column()) * geom.pixel_pitch;
}

double correction_angle(double d_c, double radius_mm) {
  if (!(radius_mm > 0.0)) {
    throw DomainError("correction angle: curvature radius must be positive");
  }
  return std::atan(d_c / radius_mm);
}

ControlReadout measure(const ConfidenceMap& cmap, const SegmentationResult& seg, const ControlParams& params) {
  ControlReadout r;
  try {
    r.x_c = confidence_centroid(cmap);
    r.d_c = centerline_offset(r.x_c, cmap.geometry);
    r.theta_c = correction_angle(r.d_c, params.curvature_radius_mm);
  } catch (const DegenerateError&) {
    r.degenerate = true;
    r.x_c = cmap.geometry.center_column();
    r.d_c = 0.0;
    r.theta_c = 0.0;
  }
  if (const Candidate* target = seg.selected_candidate()) {
    r.target_offset_mm = centerline_offset(target->centroid.x, cmap.geometry);
  }
  return r;
}

StepResult step(const ProbeState& probe, const ConfidenceMap& cmap, const SegmentationResult& seg,
                const SurfaceProfile& surface, const ControlParams& params, double dt) {
  if (!(dt > 0.0)) {
    throw DomainError("control step: dt must be positive");
  }
  StepResult out{probe, measure(cmap, seg, params)};
  ProbeState& next = out.probe;
  const ControlReadout& r = out.readout;

  if (params.correction_enabled && !r.degenerate && std::abs(r.d_c) >= params.angular_deadband_mm) {
    next.theta = std::clamp(next.theta + params.angular_gain * r.theta_c * dt, -params.theta_limit,
                            params.theta_limit);
  }
  if (r.target_offset_mm && std::abs(*r.target_offset_mm) > params.lateral_deadband_mm) {
    next.x += params.lateral_gain * *r.target_offset_mm * dt;
  }
  next.y += params.scan_speed * dt;

  const ImageGeometry& geom = cmap.geometry;
  const double force =
      params.stiffness * compute_contact(surface, next, geom, params.coupling_threshold_mm).penetration_mm;
  next.z += dt * (force - params.target_force) / params.damping;
  next.force = params.stiffness * compute_contact(surface, next, geom, params.coupling_threshold_mm).penetration_mm;
  return out;
}

}  // namespace sonoloop
