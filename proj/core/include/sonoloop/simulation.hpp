#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sonoloop/attention.hpp"
#include "sonoloop/control.hpp"
#include "sonoloop/imaging.hpp"
#include "sonoloop/intention.hpp"
#include "sonoloop/scenario.hpp"
#include "sonoloop/segmentation.hpp"

namespace sonoloop {

struct TickTelemetry {
  std::int64_t tick = 0;
  double x = 0.0;  // imaging pose of the tick
  double y = 0.0;
  double z = 0.0;
  double theta = 0.0;
  double force = 0.0;
  double x_c = 0.0;
  double d_c = 0.0;
  double theta_c = 0.0;
  bool degenerate = false;
  bool correction = true;
  std::optional<int> target;        // track id of the segmented vessel
  std::optional<int> truth_branch;  // phantom branch it overlaps most
  std::optional<double> dice;       // selected mask vs that branch's label

  bool operator==(const TickTelemetry&) const = default;
};

struct CandidateSummary {
  int track_id = 0;
  double cx = 0.0;
  double cy = 0.0;
  int area = 0;
  std::optional<int> truth_branch;

  bool operator==(const CandidateSummary&) const = default;
};

/// Row-major run-length encoding of a binary mask: (start index, length) pairs.
using MaskRuns = std::vector<std::pair<std::int64_t, std::int64_t>>;

MaskRuns encode_runs(const Mask& mask);
Mask decode_runs(const MaskRuns& runs, int width, int height);

struct TickRecord {
  TickTelemetry telemetry;
  std::uint64_t frame_digest = 0;
  std::uint64_t gaze_digest = 0;
  std::uint64_t attention_digest = 0;
  HeatmapKind gaze_kind = HeatmapKind::zero;
  HeatmapKind attention_kind = HeatmapKind::zero;
  std::vector<GazeSample> gaze;
  std::vector<CandidateSummary> candidates;
  std::optional<int> intent_target;
  std::map<int, double> evidence;
  int dwell = 0;
  std::optional<int> challenger;
  bool switched = false;
  MaskRuns selected_mask;

  bool operator==(const TickRecord&) const = default;
};

/// Everything computed in the latest tick, for display and diagnostics.
struct TickProducts {
  CrossSection cross_section;
  BModeFrame frame;
  ConfidenceMap confidence;
  AttentionHeatmap gaze;
  AttentionHeatmap attention;
  SegmentationResult segmentation;
  std::vector<LabelMask> truth;
};

/// Fixed-rate loop: render -> confidence -> gaze -> candidates -> intention ->
/// gating -> control. Deterministic for a given scenario and gaze input.
class Simulation {
 public:
  explicit Simulation(Scenario scenario);

  /// Gaze comes from the scenario's scripted source (nothing for none/live).
  TickRecord step();
  /// Gaze supplied by the caller (live sessions, replay).
  TickRecord step(std::span<const GazeSample> gaze);

  void reset();
  void set_correction(bool enabled) { scenario_.control.correction_enabled = enabled; }
  void set_control(const ControlParams& params);

  const Scenario& scenario() const noexcept { return scenario_; }
  std::int64_t tick() const noexcept { return tick_; }
  const ProbeState& probe() const noexcept { return probe_; }
  const TickProducts& products() const noexcept { return products_; }
  bool done() const noexcept { return tick_ >= scenario_.duration_ticks; }

 private:
  std::vector<GazeSample> scripted_gaze(const CrossSection& cs);
  ProbeState seated_start() const;

  Scenario scenario_;
  std::multimap<std::int64_t, GazeSample> gaze_file_;
  CandidateTracker tracker_;
  IntentionEstimator intention_;
  ProbeState probe_;
  std::int64_t tick_ = 0;
  std::optional<PixelPoint> last_gaze_;
  TickProducts products_;
};

}  // namespace sonoloop
