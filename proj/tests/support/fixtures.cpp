#include "fixtures.hpp"

#include <sonoloop/imaging.hpp>
#include <sonoloop/random.hpp>

namespace fixture {

using namespace sonoloop;

std::string scenario_path(const std::string& name) { return std::string(SONOLOOP_SCENARIO_DIR) + "/" + name + ".json"; }

Scenario scenario(const std::string& name) { return load_scenario(scenario_path(name)); }

Mask disc(const ImageGeometry& geom, double cx, double cy, double radius) {
  Mask m = make_mask(geom);
  for (int y = 0; y < geom.depth_px; ++y) {
    for (int x = 0; x < geom.width_px; ++x) {
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius) {
        m(x, y) = 1;
      }
    }
  }
  return m;
}

PhantomModel straight_phantom(double x, double z, double radius) {
  PhantomModel p;
  p.surface = SurfaceProfile::flat({-40.0, 40.0, 0.0, 150.0});
  VesselBranch b;
  b.id = 0;
  b.centerline = {{x, 0.0, z}, {x, 150.0, z}};
  b.radius = {radius, radius};
  p.tree = VesselTree({b}, 0);
  return p;
}

BModeFrame discs_frame(const ImageGeometry& geom, const std::vector<PixelPoint>& centers, double radius_px) {
  BModeFrame f{make_image(geom, 0.4), geom, 0};
  for (const auto& c : centers) {
    const Mask m = disc(geom, c.x, c.y, radius_px);
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m.values()[i]) {
        f.intensity.values()[i] = 0.03;
      }
    }
  }
  return f;
}

std::vector<Candidate> disc_candidates(const ImageGeometry& geom, const std::vector<PixelPoint>& centers,
                                       double radius_px) {
  std::vector<Candidate> out;
  int id = 1;
  for (const auto& c : centers) {
    Candidate cand;
    cand.mask = disc(geom, c.x, c.y, radius_px);
    cand.centroid = mask_centroid(cand.mask);
    cand.area = static_cast<int>(count_set(cand.mask));
    cand.track_id = id++;
    out.push_back(std::move(cand));
  }
  return out;
}

std::vector<GazeSample> gaze_at(double x, double y, std::int64_t tick, int count, double noise_px,
                                std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GazeSample> out;
  for (int i = 0; i < count; ++i) {
    out.push_back({x + noise_px * rng.normal(), y + noise_px * rng.normal(), tick, true});
  }
  return out;
}

}  // namespace fixture
