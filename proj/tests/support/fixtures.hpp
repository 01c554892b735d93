#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <sonoloop/attention.hpp>
#include <sonoloop/grid.hpp>
#include <sonoloop/phantom.hpp>
#include <sonoloop/scenario.hpp>
#include <sonoloop/segmentation.hpp>

namespace fixture {

sonoloop::Scenario scenario(const std::string& name);
std::string scenario_path(const std::string& name);

sonoloop::Mask disc(const sonoloop::ImageGeometry& geom, double cx, double cy, double radius);

/// Straight vessel along y at (x, z) under a flat skin at height 0.
sonoloop::PhantomModel straight_phantom(double x = 0.0, double z = -12.0, double radius = 3.0);

/// Frame with uniform tissue and a dark disc per center, without speckle.
sonoloop::BModeFrame discs_frame(const sonoloop::ImageGeometry& geom, const std::vector<sonoloop::PixelPoint>& centers,
                                 double radius_px);

/// Candidates (with track ids 1..n) for discs at the given centers.
std::vector<sonoloop::Candidate> disc_candidates(const sonoloop::ImageGeometry& geom,
                                                 const std::vector<sonoloop::PixelPoint>& centers, double radius_px);

/// `count` samples scattered around a point with the given noise.
std::vector<sonoloop::GazeSample> gaze_at(double x, double y, std::int64_t tick, int count, double noise_px,
                                          std::uint64_t seed);

}  // namespace fixture
