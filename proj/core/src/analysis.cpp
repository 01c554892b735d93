#include "sonoloop/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "sonoloop/errors.hpp"
#include "sonoloop/probe.hpp"

namespace sonoloop {

namespace {

ProbeState pose_of(const TickTelemetry& t) {
  ProbeState p;
  p.x = t.x;
  p.y = t.y;
  p.z = t.z;
  p.theta = t.theta;
  p.force = t.force;
  return p;
}

nlohmann::json to_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.stddev}, {"n", m.count}}; }

}  // namespace

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  out.count = static_cast<std::int64_t>(values.size());
  if (values.empty()) {
    return out;
  }
  double sum = 0.0;
  for (double v : values) {
    sum += v;
  }
  out.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) {
    sq += (v - out.mean) * (v - out.mean);
  }
  out.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  return out;
}

RunSummary summarize(std::span<const TickRecord> ticks) {
  RunSummary s;
  s.ticks = static_cast<std::int64_t>(ticks.size());
  std::vector<double> dc;
  std::map<int, std::vector<double>> dice;
  std::int64_t selected = 0;
  for (std::size_t i = 0; i < ticks.size(); ++i) {
    const TickRecord& r = ticks[i];
    const TickTelemetry& t = r.telemetry;
    if (!t.degenerate) {
      dc.push_back(std::abs(t.d_c));
    }
    if (t.target) {
      ++selected;
    }
    if (t.dice && t.truth_branch) {
      dice[*t.truth_branch].push_back(*t.dice);
    }
    if (r.switched) {
      s.switch_ticks.push_back(t.tick);
      int latency = 1;
      for (std::size_t k = i; k-- > 0 && ticks[k].dwell > 0;) {
        ++latency;
      }
      s.switch_latencies.push_back(latency);
    }
  }
  s.abs_dc = mean_std(dc);
  for (const auto& [branch, values] : dice) {
    s.dice[branch] = mean_std(values);
  }
  s.selected_fraction = ticks.empty() ? 0.0 : static_cast<double>(selected) / static_cast<double>(ticks.size());
  return s;
}

RunSummary summarize(const Recording& recording) {
  RunSummary s = summarize(std::span<const TickRecord>(recording.ticks));
  s.timing = recording.trailer;
  return s;
}

nlohmann::json to_json(const RunSummary& s) {
  nlohmann::json dice = nlohmann::json::object();
  for (const auto& [branch, m] : s.dice) {
    dice[std::to_string(branch)] = to_json(m);
  }
  nlohmann::json out{{"ticks", s.ticks},
                     {"abs_dc_mm", to_json(s.abs_dc)},
                     {"dice", dice},
                     {"switch_ticks", s.switch_ticks},
                     {"switch_latency_ticks", s.switch_latencies},
                     {"selected_fraction", s.selected_fraction}};
  if (s.timing) {
    out["tick_ms"] = {{"mean", s.timing->mean_ms}, {"p99", s.timing->p99_ms}, {"max", s.timing->max_ms}};
  }
  return out;
}

Reconstruction reconstruct(std::span<const TickRecord> ticks, const ImageGeometry& geom) {
  Reconstruction rec;
  std::optional<int> current;
  std::map<int, int> votes;
  auto close_line = [&] {
    if (rec.polylines.empty() || votes.empty()) {
      votes.clear();
      return;
    }
    int best = 0;
    int most = -1;
    for (const auto& [branch, n] : votes) {
      if (n > most) {
        most = n;
        best = branch;
      }
    }
    rec.polylines.back().branch_id = best;
    votes.clear();
  };
  for (const auto& r : ticks) {
    const TickTelemetry& t = r.telemetry;
    if (!t.target || r.selected_mask.empty()) {
      continue;
    }
    if (!current || *current != *t.target) {
      close_line();
      rec.polylines.push_back({*t.target, std::nullopt, {}, {}});
      current = t.target;
    }
    const Mask mask = decode_runs(r.selected_mask, geom.width_px, geom.depth_px);
    const PixelPoint c = mask_centroid(mask);
    rec.polylines.back().points.push_back(pixel_to_world(pose_of(t), geom, c.x, c.y));
    rec.polylines.back().point_branch.push_back(t.truth_branch);
    if (t.truth_branch) {
      ++votes[*t.truth_branch];
    }
  }
  close_line();
  return rec;
}

Reconstruction reconstruct(const Recording& recording) {
  return reconstruct(recording.ticks, recording.scenario().geometry);
}

double rms_distance(const Polyline& line, const VesselBranch& branch) {
  if (line.points.empty()) {
    return 0.0;
  }
  double sq = 0.0;
  for (const auto& p : line.points) {
    const double d = distance_to_centerline(branch, p);
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(line.points.size()));
}

double rms_distance(const Polyline& line, const VesselTree& tree) {
  if (line.points.empty()) {
    return 0.0;
  }
  if (line.point_branch.size() != line.points.size()) {
    throw DomainError("polyline branch attribution does not match its points");
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < line.points.size(); ++i) {
    if (!line.point_branch[i]) {
      throw DomainError("polyline point has no branch attribution");
    }
    double d = std::numeric_limits<double>::infinity();
    for (int id : tree.lineage(*line.point_branch[i])) {
      d = std::min(d, distance_to_centerline(tree.branch(id), line.points[i]));
    }
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(line.points.size()));
}

void write_reconstruction_csv(std::ostream& out, const Reconstruction& rec) {
  out << "polyline,target,branch,x,y,z\n";
  out.precision(17);
  for (std::size_t i = 0; i < rec.polylines.size(); ++i) {
    const Polyline& line = rec.polylines[i];
    for (const auto& p : line.points) {
      out << i << ',' << line.target_id << ',';
      if (line.branch_id) {
        out << *line.branch_id;
      }
      out << ',' << p.x() << ',' << p.y() << ',' << p.z() << '\n';
    }
  }
}

void write_boundary_ply(std::ostream& out, std::span<const TickRecord> ticks, const ImageGeometry& geom) {
  std::vector<Eigen::Vector3d> points;
  for (const auto& r : ticks) {
    if (r.selected_mask.empty()) {
      continue;
    }
    const Mask mask = decode_runs(r.selected_mask, geom.width_px, geom.depth_px);
    const ProbeState pose = pose_of(r.telemetry);
    for (int y = 0; y < mask.height(); ++y) {
      for (int x = 0; x < mask.width(); ++x) {
        if (!mask(x, y)) {
          continue;
        }
        const bool edge = x == 0 || y == 0 || x == mask.width() - 1 || y == mask.height() - 1 || !mask(x - 1, y) ||
                          !mask(x + 1, y) || !mask(x, y - 1) || !mask(x, y + 1);
        if (edge) {
          points.push_back(pixel_to_world(pose, geom, x, y));
        }
      }
    }
  }
  out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
      << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  out.precision(10);
  for (const auto& p : points) {
    out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  }
}

}  // namespace sonoloop
