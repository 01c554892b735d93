#include "sonoloop/probe.hpp"

#include <cmath>

namespace sonoloop {

Eigen::Vector2d lateral_axis(double theta) { return {std::cos(theta), std::sin(theta)}; }

Eigen::Vector2d depth_axis(double theta) { return {std::sin(theta), -std::cos(theta)}; }

Eigen::Vector3d plane_to_world(const ProbeState& probe, PlanePoint p) {
  const Eigen::Vector2d xz =
      Eigen::Vector2d(probe.x, probe.z) + p.u * lateral_axis(probe.theta) + p.d * depth_axis(probe.theta);
  return {xz.x(), probe.y, xz.y()};
}

PlanePoint world_to_plane(const ProbeState& probe, const Eigen::Vector3d& world) {
  const Eigen::Vector2d rel(world.x() - probe.x, world.z() - probe.z);
  return {rel.dot(lateral_axis(probe.theta)), rel.dot(depth_axis(probe.theta))};
}

PlanePoint pixel_to_plane(const ImageGeometry& geom, double col, double row) {
  return {(col - geom.center_column()) * geom.pixel_pitch, row * geom.pixel_pitch};
}

PixelPoint plane_to_pixel(const ImageGeometry& geom, PlanePoint p) {
  return {p.u / geom.pixel_pitch + geom.center_column(), p.d / geom.pixel_pitch};
}

}  // namespace sonoloop
