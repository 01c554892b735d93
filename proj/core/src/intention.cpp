#include "sonoloop/intention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sonoloop/errors.hpp"

namespace sonoloop {

namespace {

// Each pixel belongs to at most one candidate: the one whose dilated mask covers
// it, nearest centroid first. Returns per-candidate gaze mass.
std::vector<double> pooled_gaze_mass(const HistoryEntry& entry, int dilation_px) {
  const auto& candidates = entry.candidates;
  std::vector<double> mass(candidates.size(), 0.0);
  if (candidates.empty() || entry.gaze.kind == HeatmapKind::zero) {
    return mass;
  }
  std::vector<Mask> regions;
  regions.reserve(candidates.size());
  for (const auto& c : candidates) {
    regions.push_back(dilate(c.mask, dilation_px));
  }
  const Image& gaze = entry.gaze.values;
  for (int y = 0; y < gaze.height(); ++y) {
    for (int x = 0; x < gaze.width(); ++x) {
      const double v = gaze(x, y);
      if (v <= 0.0) {
        continue;
      }
      std::optional<std::size_t> owner;
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < regions.size(); ++i) {
        if (!regions[i](x, y)) {
          continue;
        }
        const double d = std::hypot(candidates[i].centroid.x - x, candidates[i].centroid.y - y);
        if (d < nearest) {
          nearest = d;
          owner = i;
        }
      }
      if (owner) {
        mass[*owner] += v;
      }
    }
  }
  return mass;
}

double emitted_fraction(const HistoryBuffer& history, int id) {
  const auto& entries = history.entries();
  const auto hits = std::count_if(entries.begin(), entries.end(),
                                  [id](const HistoryEntry& e) { return e.emitted_target == id; });
  return static_cast<double>(hits) / static_cast<double>(entries.size());
}

}  // namespace

void IntentParams::validate() const {
  if (window < 1 || switch_dwell < 1 || switch_dwell > window) {
    throw DomainError("intention: need 1 <= switch_dwell <= window");
  }
  if (gaze_weight < 0.0 || history_weight < 0.0 || gaze_weight + history_weight > 1.0 + 1e-12) {
    throw DomainError("intention: weights must be non-negative and sum to at most 1");
  }
  if (dilation_px < 0) {
    throw DomainError("intention: dilation must be non-negative");
  }
  heatmap.validate();
}

void HistoryBuffer::push(HistoryEntry entry) {
  if (!entries_.empty() && entry.tick < entries_.back().tick) {
    throw DomainError("history: ticks must not go backwards");
  }
  entries_.push_back(std::move(entry));
  while (entries_.size() > capacity_) {
    entries_.pop_front();
  }
}

void HistoryBuffer::set_emitted_target(std::optional<int> target) {
  if (entries_.empty()) {
    throw DomainError("history: no entry to annotate");
  }
  entries_.back().emitted_target = target;
}

IntentState reset(const IntentState&) { return IntentState{}; }

IntentOutput update(const HistoryBuffer& history, const IntentState& state, const IntentParams& params,
                    std::uint64_t seed) {
  if (history.empty()) {
    throw DomainError("intention update needs a non-empty history");
  }
  const HistoryEntry& latest = history.latest();
  const ImageGeometry geom = latest.gaze.geometry;

  IntentOutput out;
  out.state = state;
  IntentState& next = out.state;

  const auto mass = pooled_gaze_mass(latest, params.dilation_px);
  double total_mass = 0.0;
  for (double v : latest.gaze.values.values()) {
    total_mass += v;
  }

  next.evidence.clear();
  for (std::size_t i = 0; i < latest.candidates.size(); ++i) {
    const int id = latest.candidates[i].id;
    const double gaze_share = total_mass > 0.0 ? mass[i] / total_mass : 0.0;
    next.evidence[id] = params.gaze_weight * gaze_share + params.history_weight * emitted_fraction(history, id);
  }

  const bool gaze_in_window = std::any_of(history.entries().begin(), history.entries().end(),
                                          [](const HistoryEntry& e) { return e.gaze.kind != HeatmapKind::zero; });
  if (!gaze_in_window) {
    next.current_target.reset();
    next.dwell = 0;
    next.challenger.reset();
    next.target_centroid.reset();
    next.target_missing = 0;
    out.heatmap = zero_heatmap(geom);
    return out;
  }

  auto find = [&](int id) -> const TrackedMask* {
    for (const auto& c : latest.candidates) {
      if (c.id == id) {
        return &c;
      }
    }
    return nullptr;
  };

  if (!next.current_target) {
    std::optional<int> pick;
    double best = 0.0;
    for (std::size_t i = 0; i < latest.candidates.size(); ++i) {
      const int id = latest.candidates[i].id;
      if (mass[i] > 0.0 && (!pick || next.evidence[id] > best)) {
        pick = id;
        best = next.evidence[id];
      }
    }
    next.current_target = pick;
    next.dwell = 0;
    next.challenger.reset();
    next.target_missing = 0;
    next.target_centroid.reset();
  } else {
    const int current = *next.current_target;
    const double current_evidence =
        next.evidence.contains(current) ? next.evidence[current] : params.history_weight * emitted_fraction(history, current);
    std::optional<int> rival;
    double rival_evidence = -1.0;
    for (const auto& [id, e] : next.evidence) {
      if (id != current && e > rival_evidence) {
        rival = id;
        rival_evidence = e;
      }
    }
    if (rival && rival_evidence > current_evidence) {
      next.dwell = next.challenger == rival ? std::min(next.dwell + 1, params.window) : 1;
      next.challenger = rival;
    } else {
      next.dwell = 0;
      next.challenger.reset();
    }
    if (next.dwell >= params.switch_dwell) {
      next.current_target = rival;
      next.dwell = 0;
      next.challenger.reset();
      next.target_missing = 0;
      next.target_centroid.reset();
      out.switched = true;
    }
  }

  if (next.current_target) {
    if (const TrackedMask* t = find(*next.current_target)) {
      next.target_centroid = t->centroid;
      next.target_missing = 0;
    } else if (++next.target_missing > params.window || !next.target_centroid) {
      next.current_target.reset();
      next.target_centroid.reset();
      next.target_missing = 0;
      next.dwell = 0;
      next.challenger.reset();
    }
  }

  if (next.current_target && next.target_centroid) {
    HeatmapParams shape = params.heatmap;
    shape.centroid_cov = {};
    out.heatmap = diffused_heatmap(*next.target_centroid, geom, shape, seed, HeatmapKind::stabilized);
  } else {
    out.heatmap = zero_heatmap(geom);
  }
  return out;
}

IntentionEstimator::IntentionEstimator(IntentParams params)
    : params_(std::move(params)), history_(static_cast<std::size_t>(params_.window)) {
  params_.validate();
}

IntentOutput IntentionEstimator::step(std::int64_t tick, AttentionHeatmap gaze, const std::vector<Candidate>& candidates,
                                      std::uint64_t seed) {
  HistoryEntry entry;
  entry.tick = tick;
  entry.gaze = std::move(gaze);
  for (const auto& c : candidates) {
    if (c.track_id) {
      entry.candidates.push_back({*c.track_id, c.mask, c.centroid});
    }
  }
  history_.push(std::move(entry));
  IntentOutput out = update(history_, state_, params_, seed);
  history_.set_emitted_target(out.state.current_target);
  state_ = out.state;
  return out;
}

void IntentionEstimator::reset() {
  history_.clear();
  state_ = sonoloop::reset(state_);
}

}  // namespace sonoloop
