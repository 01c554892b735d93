#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "sonoloop/attention.hpp"
#include "sonoloop/segmentation.hpp"

namespace sonoloop {

struct IntentParams {
  int window = 64;         // T, ticks of history
  int switch_dwell = 32;   // D, ticks of sustained superior evidence before a switch
  double gaze_weight = 0.7;
  double history_weight = 0.3;
  int dilation_px = 8;
  HeatmapParams heatmap;   // shape of the emitted heatmap; the centroid spread is forced to 0

  void validate() const;
  bool operator==(const IntentParams&) const = default;
};

struct TrackedMask {
  int id = 0;
  Mask mask;
  PixelPoint centroid;
};

struct HistoryEntry {
  std::int64_t tick = 0;
  AttentionHeatmap gaze;  // raw gaze heatmap of the tick
  std::vector<TrackedMask> candidates;
  std::optional<int> emitted_target;  // filled once the tick has been estimated
};

/// Ring buffer of the last `capacity` ticks, ordered by tick.
class HistoryBuffer {
 public:
  explicit HistoryBuffer(std::size_t capacity = 64) : capacity_(capacity) {}

  /// Throws DomainError when ticks go backwards.
  void push(HistoryEntry entry);
  void set_emitted_target(std::optional<int> target);
  void clear() { entries_.clear(); }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const HistoryEntry& latest() const { return entries_.back(); }
  const std::deque<HistoryEntry>& entries() const noexcept { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<HistoryEntry> entries_;
};

struct IntentState {
  std::optional<int> current_target;
  std::map<int, double> evidence;  // per candidate id, latest tick
  int dwell = 0;                   // consecutive ticks a challenger has out-scored the target
  std::optional<int> challenger;
  std::optional<PixelPoint> target_centroid;  // last seen
  int target_missing = 0;                     // ticks since the target was last detected

  bool operator==(const IntentState&) const = default;
};

struct IntentOutput {
  IntentState state;
  AttentionHeatmap heatmap;
  bool switched = false;
};

/// Evidence-accumulation stabilizer.
///
///   e_i = gaze_weight * (gaze mass of the latest raw heatmap inside the dilated
///         mask of i, over the total mass)
///       + history_weight * (fraction of window ticks where i was emitted)
///
/// A challenger replaces the target only after out-scoring it on switch_dwell
/// consecutive ticks. Without a target, the best gazed candidate is taken
/// immediately. Without any gaze in the window the output is a zero heatmap.
IntentOutput update(const HistoryBuffer& history, const IntentState& state, const IntentParams& params,
                    std::uint64_t seed);

IntentState reset(const IntentState& state = {});

/// Owns history and state; the simulation loop's view of the module.
class IntentionEstimator {
 public:
  explicit IntentionEstimator(IntentParams params = {});

  IntentOutput step(std::int64_t tick, AttentionHeatmap gaze, const std::vector<Candidate>& candidates,
                    std::uint64_t seed);
  void reset();

  const IntentState& state() const noexcept { return state_; }
  const HistoryBuffer& history() const noexcept { return history_; }
  const IntentParams& params() const noexcept { return params_; }

 private:
  IntentParams params_;
  HistoryBuffer history_;
  IntentState state_;
};

}  // namespace sonoloop
