#include "sonoloop/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "sonoloop/errors.hpp"

namespace sonoloop {

namespace {

double catmull_rom(double p0, double p1, double p2, double p3, double t) {
  return 0.5 * (2.0 * p1 + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t * t * t);
}

double segment_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& p) {
  const Eigen::Vector3d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}

std::string branch_label(const VesselBranch& b) {
  std::ostringstream out;
  out << "branch " << b.id;
  return out.str();
}

}  // namespace

SurfaceProfile SurfaceProfile::flat(Extent extent, double height) {
  SurfaceProfile s;
  s.kind_ = SurfaceKind::flat;
  s.extent_ = extent;
  s.flat_height_ = height;
  return s;
}

SurfaceProfile SurfaceProfile::cylinder(Extent extent, double radius) {
  if (!(radius > 0.0)) {
    throw DomainError("cylinder surface: radius must be positive");
  }
  SurfaceProfile s;
  s.kind_ = SurfaceKind::cylinder;
  s.extent_ = extent;
  s.radius_ = radius;
  return s;
}

SurfaceProfile SurfaceProfile::spline(Extent extent, int nx, int ny, std::vector<double> heights) {
  if (nx < 2 || ny < 2 || heights.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny)) {
    throw DomainError("spline surface: need an nx*ny grid of control heights with nx, ny >= 2");
  }
  SurfaceProfile s;
  s.kind_ = SurfaceKind::spline_heightfield;
  s.extent_ = extent;
  s.nx_ = nx;
  s.ny_ = ny;
  s.heights_ = std::move(heights);
  return s;
}

double SurfaceProfile::height(double x, double y) const {
  if (!contains(x, y)) {
    std::ostringstream msg;
    msg << "surface query (" << x << ", " << y << ") outside the scan extent";
    throw DomainError(msg.str());
  }
  switch (kind_) {
    case SurfaceKind::flat:
      return flat_height_;
    case SurfaceKind::cylinder: {
      const double under = radius_ * radius_ - x * x;
      if (under < 0.0) {
        throw DomainError("surface query beyond the cylinder radius");
      }
      return std::sqrt(under);
    }
    case SurfaceKind::spline_heightfield:
      return spline_height(x, y);
  }
  return 0.0;
}

double SurfaceProfile::spline_height(double x, double y) const {
  const double gx = (x - extent_.x_min) / (extent_.x_max - extent_.x_min) * (nx_ - 1);
  const double gy = (y - extent_.y_min) / (extent_.y_max - extent_.y_min) * (ny_ - 1);
  const int ix = std::clamp(static_cast<int>(std::floor(gx)), 0, nx_ - 2);
  const int iy = std::clamp(static_cast<int>(std::floor(gy)), 0, ny_ - 2);
  const double tx = gx - ix;
  const double ty = gy - iy;
  auto at = [this](int i, int j) {
    i = std::clamp(i, 0, nx_ - 1);
    j = std::clamp(j, 0, ny_ - 1);
    return heights_[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i)];
  };
  double rows[4];
  for (int k = 0; k < 4; ++k) {
    const int j = iy - 1 + k;
    rows[k] = catmull_rom(at(ix - 1, j), at(ix, j), at(ix + 1, j), at(ix + 2, j), tx);
  }
  return catmull_rom(rows[0], rows[1], rows[2], rows[3], ty);
}

double surface_height(double x, double y, const SurfaceProfile& profile) { return profile.height(x, y); }

VesselTree::VesselTree(std::vector<VesselBranch> branches, int root) : branches_(std::move(branches)), root_(root) {}

bool VesselTree::has_branch(int id) const noexcept {
  return std::any_of(branches_.begin(), branches_.end(), [id](const VesselBranch& b) { return b.id == id; });
}

const VesselBranch& VesselTree::branch(int id) const {
  for (const auto& b : branches_) {
    if (b.id == id) {
      return b;
    }
  }
  throw DomainError("unknown branch id " + std::to_string(id));
}

std::vector<int> VesselTree::lineage(int id) const {
  std::vector<int> out;
  std::optional<int> cur = id;
  while (cur && out.size() <= branches_.size()) {
    out.push_back(*cur);
    cur = branch(*cur).parent;
  }
  return out;
}

std::vector<std::string> check_phantom(const PhantomModel& phantom) {
  std::vector<std::string> issues;
  const auto& s = phantom.surface;
  const auto& e = s.extent();
  if (!(e.x_min < e.x_max) || !(e.y_min < e.y_max)) {
    issues.emplace_back("surface.extent: min must be below max on both axes");
  }
  if (s.kind() == SurfaceKind::cylinder && (std::abs(e.x_min) > s.radius() || std::abs(e.x_max) > s.radius())) {
    issues.emplace_back("surface.extent: lateral extent exceeds the cylinder radius");
  }
  for (double h : s.control_heights()) {
    if (!std::isfinite(h)) {
      issues.emplace_back("surface.heights: non-finite control height");
      break;
    }
  }

  const auto& branches = phantom.tree.branches();
  std::set<int> ids;
  for (const auto& b : branches) {
    if (!ids.insert(b.id).second) {
      issues.push_back(branch_label(b) + ": duplicate id");
    }
  }
  if (!ids.contains(phantom.tree.root())) {
    issues.emplace_back("tree.root: no branch with the root id");
  }

  for (const auto& b : branches) {
    const auto label = branch_label(b);
    if (b.centerline.size() < 2) {
      issues.push_back(label + ": centerline needs at least 2 vertices");
    }
    if (b.radius.size() != b.centerline.size()) {
      issues.push_back(label + ": one radius per vertex required");
    }
    if (std::any_of(b.radius.begin(), b.radius.end(), [](double r) { return !(r > 0.0); })) {
      issues.push_back(label + ": radii must be positive");
    }
    if (b.id == phantom.tree.root()) {
      if (b.parent) {
        issues.push_back(label + ": root cannot have a parent");
      }
    } else if (!b.parent) {
      issues.push_back(label + ": non-root branch without a parent");
    } else if (!ids.contains(*b.parent)) {
      issues.push_back(label + ": parent " + std::to_string(*b.parent) + " does not exist");
    } else if (!b.centerline.empty()) {
      const auto& parent = phantom.tree.branch(*b.parent);
      if (distance_to_centerline(parent, b.centerline.front()) > 0.1) {
        issues.push_back(label + ": first vertex is not on the parent centerline (tolerance 0.1 mm)");
      }
    }

    for (std::size_t k = 0; k < b.centerline.size() && k < b.radius.size(); ++k) {
      const auto& p = b.centerline[k];
      if (!s.contains(p.x(), p.y())) {
        issues.push_back(label + ": vertex " + std::to_string(k) + " outside the surface extent");
        continue;
      }
      double h = 0.0;
      try {
        h = s.height(p.x(), p.y());
      } catch (const DomainError&) {
        issues.push_back(label + ": vertex " + std::to_string(k) + " has no surface above it");
        continue;
      }
      if (!(p.z() + b.radius[k] < h)) {
        issues.push_back(label + ": vertex " + std::to_string(k) + " is not strictly below the surface");
      }
    }
  }

  // Cycles: walking parents from any branch must reach the root within |branches| steps.
  if (issues.empty()) {
    for (const auto& b : branches) {
      std::optional<int> cur = b.id;
      std::size_t steps = 0;
      while (cur && *cur != phantom.tree.root() && steps <= branches.size()) {
        cur = phantom.tree.branch(*cur).parent;
        ++steps;
      }
      if (!cur || steps > branches.size()) {
        issues.push_back(branch_label(b) + ": parent chain does not reach the root");
      }
    }
  }
  return issues;
}

CrossSection cross_section(const VesselTree& tree, const ProbeState& probe, const ImageGeometry& fov) {
  fov.validate();
  CrossSection cs;
  const double plane_y = probe.y;
  const double half_width = 0.5 * fov.width_px * fov.pixel_pitch;
  const double depth = fov.depth_px * fov.pixel_pitch;
  const Eigen::Vector2d lat = lateral_axis(probe.theta);
  const Eigen::Vector2d dep = depth_axis(probe.theta);

  for (const auto& b : tree.branches()) {
    for (std::size_t k = 0; k + 1 < b.centerline.size(); ++k) {
      const Eigen::Vector3d& p0 = b.centerline[k];
      const Eigen::Vector3d& p1 = b.centerline[k + 1];
      const double y0 = p0.y();
      const double y1 = p1.y();
      if (y0 == y1) {
        continue;
      }
      const bool crosses = y0 < y1 ? (plane_y >= y0 && plane_y < y1) : (plane_y >= y1 && plane_y < y0);
      if (!crosses) {
        continue;
      }
      const double t = (plane_y - y0) / (y1 - y0);
      const Eigen::Vector3d at = p0 + t * (p1 - p0);
      const double r = b.radius[k] + t * (b.radius[k + 1] - b.radius[k]);
      const Eigen::Vector3d dir = (p1 - p0).normalized();

      Lumen lumen;
      lumen.branch_id = b.id;
      lumen.center = world_to_plane(probe, at);
      const double cos_phi = std::abs(dir.y());
      lumen.semi_minor = r;
      lumen.semi_major = r / cos_phi;
      const Eigen::Vector2d in_plane(dir.x(), dir.z());
      const double du = in_plane.dot(lat);
      const double dd = in_plane.dot(dep);
      lumen.orientation = std::hypot(du, dd) > 1e-12 ? std::atan2(dd, du) : 0.0;

      const double c = std::cos(lumen.orientation);
      const double sn = std::sin(lumen.orientation);
      const double ext_u = std::sqrt(std::pow(lumen.semi_major * c, 2) + std::pow(lumen.semi_minor * sn, 2));
      const double ext_d = std::sqrt(std::pow(lumen.semi_major * sn, 2) + std::pow(lumen.semi_minor * c, 2));
      lumen.clipped = lumen.center.u - ext_u < -half_width || lumen.center.u + ext_u > half_width ||
                      lumen.center.d - ext_d < 0.0 || lumen.center.d + ext_d > depth;
      cs.lumens.push_back(lumen);
    }
  }
  return cs;
}

bool lumen_contains(const Lumen& lumen, const ImageGeometry& geom, int col, int row) {
  if (!(lumen.semi_major > 0.0) || !(lumen.semi_minor > 0.0)) {
    return false;
  }
  const PlanePoint p = pixel_to_plane(geom, col, row);
  const double du = p.u - lumen.center.u;
  const double dd = p.d - lumen.center.d;
  const double c = std::cos(lumen.orientation);
  const double s = std::sin(lumen.orientation);
  const double along = du * c + dd * s;
  const double across = -du * s + dd * c;
  return along * along / (lumen.semi_major * lumen.semi_major) +
             across * across / (lumen.semi_minor * lumen.semi_minor) <=
         1.0;
}

std::vector<LabelMask> rasterize_labels(const CrossSection& cs, const ImageGeometry& fov) {
  fov.validate();
  std::vector<LabelMask> out;
  out.reserve(cs.lumens.size());
  for (const auto& lumen : cs.lumens) {
    LabelMask label{lumen.branch_id, make_mask(fov)};
    if (lumen.semi_major > 0.0 && lumen.semi_minor > 0.0) {
      const PixelPoint c = plane_to_pixel(fov, lumen.center);
      const double reach = lumen.semi_major / fov.pixel_pitch + 1.0;
      const int x0 = std::max(0, static_cast<int>(std::floor(c.x - reach)));
      const int x1 = std::min(fov.width_px - 1, static_cast<int>(std::ceil(c.x + reach)));
      const int y0 = std::max(0, static_cast<int>(std::floor(c.y - reach)));
      const int y1 = std::min(fov.depth_px - 1, static_cast<int>(std::ceil(c.y + reach)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          if (lumen_contains(lumen, fov, x, y)) {
            label.mask(x, y) = 1;
          }
        }
      }
    }
    out.push_back(std::move(label));
  }
  return out;
}

double distance_to_centerline(const VesselBranch& branch, const Eigen::Vector3d& point) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < branch.centerline.size(); ++k) {
    best = std::min(best, segment_distance(branch.centerline[k], branch.centerline[k + 1], point));
  }
  if (branch.centerline.size() == 1) {
    best = (branch.centerline.front() - point).norm();
  }
  return best;
}

}  // namespace sonoloop
