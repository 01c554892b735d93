#pragma once

#include <Eigen/Core>

#include "sonoloop/grid.hpp"

namespace sonoloop {

/// Probe pose. x is lateral, y the scan (advance) direction, z elevation of the
/// transducer-face center, all in mm in the world frame. theta rotates the probe
/// about its y-axis; positive theta raises the right end of the face (column
/// width-1). force is the contact force in N.
struct ProbeState {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double theta = 0.0;
  double force = 0.0;

  bool operator==(const ProbeState&) const = default;
};

/// Unit vector of the image lateral axis, as (world x, world z).
Eigen::Vector2d lateral_axis(double theta);

/// Unit vector of the image depth axis (into tissue), as (world x, world z).
Eigen::Vector2d depth_axis(double theta);

/// Image-plane coordinates in mm: u lateral from the face center, d depth below the face.
struct PlanePoint {
  double u = 0.0;
  double d = 0.0;
};

Eigen::Vector3d plane_to_world(const ProbeState& probe, PlanePoint p);
PlanePoint world_to_plane(const ProbeState& probe, const Eigen::Vector3d& world);

PlanePoint pixel_to_plane(const ImageGeometry& geom, double col, double row);
PixelPoint plane_to_pixel(const ImageGeometry& geom, PlanePoint p);

inline Eigen::Vector3d pixel_to_world(const ProbeState& probe, const ImageGeometry& geom, double col, double row) {
  return plane_to_world(probe, pixel_to_plane(geom, col, row));
}

}  // namespace sonoloop
