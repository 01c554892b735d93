#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "sonoloop/phantom.hpp"
#include "sonoloop/record.hpp"

namespace sonoloop {

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::int64_t count = 0;
};

MeanStd mean_std(std::span<const double> values);

struct RunSummary {
  std::int64_t ticks = 0;
  MeanStd abs_dc;                       // non-degenerate ticks only
  std::map<int, MeanStd> dice;          // by ground-truth branch
  std::vector<std::int64_t> switch_ticks;
  std::vector<int> switch_latencies;    // ticks of sustained challenge ending in each switch
  double selected_fraction = 0.0;
  std::optional<RecordTrailer> timing;  // wall-clock tick cost, when known

  bool empty() const noexcept { return ticks == 0; }
};

RunSummary summarize(std::span<const TickRecord> ticks);
RunSummary summarize(const Recording& recording);
nlohmann::json to_json(const RunSummary& summary);

struct Polyline {
  int target_id = 0;                    // tracked candidate that was followed
  std::optional<int> branch_id;         // ground-truth branch most of its points belong to
  std::vector<Eigen::Vector3d> points;  // world mm, ordered by y
  std::vector<std::optional<int>> point_branch;  // ground-truth branch per point
};

struct Reconstruction {
  std::vector<Polyline> polylines;
};

/// Selected-mask centroids mapped through the imaging pose into world mm. A new
/// polyline starts whenever the followed target changes.
Reconstruction reconstruct(std::span<const TickRecord> ticks, const ImageGeometry& geom);
Reconstruction reconstruct(const Recording& recording);

/// RMS distance of the polyline points to a branch centerline, in mm.
double rms_distance(const Polyline& line, const VesselBranch& branch);
/// Each point against the nearest centerline along the branch it was segmented
/// from and that branch's ancestors. A track that runs through a junction is
/// measured on the path it followed. Throws DomainError when a point has no
/// branch attribution.
double rms_distance(const Polyline& line, const VesselTree& tree);

/// One row per point: polyline,target,branch,x,y,z.
void write_reconstruction_csv(std::ostream& out, const Reconstruction& rec);

/// ASCII PLY point cloud of the selected-mask boundary pixels, in world mm.
void write_boundary_ply(std::ostream& out, std::span<const TickRecord> ticks, const ImageGeometry& geom);

}  // namespace sonoloop
