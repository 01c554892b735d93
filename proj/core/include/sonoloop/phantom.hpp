#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "sonoloop/grid.hpp"
#include "sonoloop/probe.hpp"

namespace sonoloop {

struct Extent {
  double x_min = -50.0;
  double x_max = 50.0;
  double y_min = 0.0;
  double y_max = 150.0;

  bool contains(double x, double y) const noexcept {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
};

enum class SurfaceKind { flat, cylinder, spline_heightfield };

/// Skin surface z = h(x, y) over a rectangular scan area.
///
/// flat:      constant height.
/// cylinder:  arm-like cylinder along y with axis at z = 0, h = sqrt(R^2 - x^2).
/// spline:    Catmull-Rom bicubic patch through a regular grid of control heights
///            spanning the extent (row-major, nx columns along x, ny rows along y).
class SurfaceProfile {
 public:
  static SurfaceProfile flat(Extent extent, double height = 0.0);
  static SurfaceProfile cylinder(Extent extent, double radius);
  static SurfaceProfile spline(Extent extent, int nx, int ny, std::vector<double> heights);

  SurfaceProfile() = default;

  SurfaceKind kind() const noexcept { return kind_; }
  const Extent& extent() const noexcept { return extent_; }
  double flat_height() const noexcept { return flat_height_; }
  double radius() const noexcept { return radius_; }
  int control_nx() const noexcept { return nx_; }
  int control_ny() const noexcept { return ny_; }
  const std::vector<double>& control_heights() const noexcept { return heights_; }

  bool contains(double x, double y) const noexcept { return extent_.contains(x, y); }

  /// Throws DomainError outside the extent.
  double height(double x, double y) const;

 private:
  double spline_height(double x, double y) const;

  SurfaceKind kind_ = SurfaceKind::flat;
  Extent extent_;
  double flat_height_ = 0.0;
  double radius_ = 0.0;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<double> heights_;
};

double surface_height(double x, double y, const SurfaceProfile& profile);

struct VesselBranch {
  int id = 0;
  std::vector<Eigen::Vector3d> centerline;  // mm, world frame
  std::vector<double> radius;               // mm, one per vertex
  std::optional<int> parent;
  double junction = 0.0;  // normalized arc-length position on the parent where this branch starts
};

class VesselTree {
 public:
  VesselTree() = default;
  VesselTree(std::vector<VesselBranch> branches, int root);

  const std::vector<VesselBranch>& branches() const noexcept { return branches_; }
  int root() const noexcept { return root_; }

  /// Throws DomainError when the id is unknown.
  const VesselBranch& branch(int id) const;
  bool has_branch(int id) const noexcept;

  /// The branch followed by its ancestors up to the root.
  std::vector<int> lineage(int id) const;

 private:
  std::vector<VesselBranch> branches_;
  int root_ = 0;
};

struct PhantomModel {
  SurfaceProfile surface;
  VesselTree tree;
};

/// Checks every structural invariant of the phantom and returns human-readable
/// issues; an empty list means valid.
std::vector<std::string> check_phantom(const PhantomModel& phantom);

/// One transversal vessel crossing of the imaging plane, in image-plane mm.
/// The ellipse's major axis makes `orientation` radians with the lateral axis,
/// measured toward increasing depth.
struct Lumen {
  int branch_id = 0;
  PlanePoint center;
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double orientation = 0.0;
  bool clipped = false;  // not entirely inside the field of view
};

struct CrossSection {
  std::vector<Lumen> lumens;
};

/// Intersects every branch with the imaging plane y = probe.y. Segments are
/// treated as half-open in y so a shared junction vertex is counted once.
CrossSection cross_section(const VesselTree& tree, const ProbeState& probe, const ImageGeometry& fov);

/// Pixel-center-inside-ellipse test.
bool lumen_contains(const Lumen& lumen, const ImageGeometry& geom, int col, int row);

struct LabelMask {
  int branch_id = 0;
  Mask mask;
};

std::vector<LabelMask> rasterize_labels(const CrossSection& cs, const ImageGeometry& fov);

/// Shortest distance from a point to a branch polyline.
double distance_to_centerline(const VesselBranch& branch, const Eigen::Vector3d& point);

}  // namespace sonoloop
