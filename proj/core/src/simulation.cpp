#include "sonoloop/simulation.hpp"

#include <algorithm>

#include "sonoloop/errors.hpp"
#include "sonoloop/random.hpp"

namespace sonoloop {

namespace {

// Sub-seed streams of one scenario seed.
constexpr std::uint64_t kRenderStream = 1;
constexpr std::uint64_t kIntentStream = 2;
constexpr std::uint64_t kGazeStream = 3;

// The scripted operator is sampled like a 120 Hz tracker on a 30 Hz loop.
constexpr int kScriptedSamplesPerTick = 4;

std::uint64_t tick_seed(std::uint64_t seed, std::uint64_t stream, std::int64_t tick) {
  return mix_seed(mix_seed(seed, stream), static_cast<std::uint64_t>(tick));
}

std::size_t overlap(const Mask& a, const Mask& b) {
  std::size_t n = 0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) {
    n += (va[i] && vb[i]) ? 1 : 0;
  }
  return n;
}

const LabelMask* best_truth(const Mask& mask, const std::vector<LabelMask>& truth) {
  const LabelMask* best = nullptr;
  std::size_t most = 0;
  for (const auto& label : truth) {
    const std::size_t n = overlap(mask, label.mask);
    if (n > most) {
      most = n;
      best = &label;
    }
  }
  return best;
}

std::optional<PixelPoint> lumen_pixel(const CrossSection& cs, int branch_id, const ImageGeometry& geom) {
  for (const auto& lumen : cs.lumens) {
    if (lumen.branch_id != branch_id) {
      continue;
    }
    const double x = lumen.center.u / geom.pixel_pitch + geom.center_column();
    const double y = lumen.center.d / geom.pixel_pitch;
    if (x >= 0.0 && y >= 0.0 && x <= geom.width_px - 1 && y <= geom.depth_px - 1) {
      return PixelPoint{x, y};
    }
  }
  return std::nullopt;
}

}  // namespace

MaskRuns encode_runs(const Mask& mask) {
  MaskRuns runs;
  const auto v = mask.values();
  std::int64_t i = 0;
  const auto n = static_cast<std::int64_t>(v.size());
  while (i < n) {
    if (!v[static_cast<std::size_t>(i)]) {
      ++i;
      continue;
    }
    const std::int64_t start = i;
    while (i < n && v[static_cast<std::size_t>(i)]) {
      ++i;
    }
    runs.emplace_back(start, i - start);
  }
  return runs;
}

Mask decode_runs(const MaskRuns& runs, int width, int height) {
  Mask mask(width, height, 0);
  auto v = mask.values();
  const auto n = static_cast<std::int64_t>(v.size());
  for (const auto& [start, length] : runs) {
    if (start < 0 || length < 0 || start + length > n) {
      throw DomainError("mask run outside the image");
    }
    std::fill_n(v.begin() + start, length, std::uint8_t{1});
  }
  return mask;
}

Simulation::Simulation(Scenario scenario)
    : scenario_(std::move(scenario)), intention_(scenario_.intention) {
  scenario_.geometry.validate();
  scenario_.control.validate();
  if (scenario_.gaze.kind == GazeSourceKind::scripted && !scenario_.gaze.file.empty()) {
    for (const auto& s : read_gaze_stream(scenario_.gaze.file)) {
      gaze_file_.emplace(s.t, s);
    }
  }
  probe_ = seated_start();
}

ProbeState Simulation::seated_start() const {
  ProbeState p = scenario_.initial_probe;
  const auto& c = scenario_.control;
  p.z = seat_elevation(scenario_.phantom.surface, p, scenario_.geometry, c.target_force / c.stiffness);
  p.force = c.target_force;
  return p;
}

void Simulation::reset() {
  tracker_.reset();
  intention_.reset();
  probe_ = seated_start();
  tick_ = 0;
  last_gaze_.reset();
  products_ = {};
}

void Simulation::set_control(const ControlParams& params) {
  params.validate();
  scenario_.control = params;
}

std::vector<GazeSample> Simulation::scripted_gaze(const CrossSection& cs) {
  const GazeSource& src = scenario_.gaze;
  std::vector<GazeSample> out;
  if (src.kind != GazeSourceKind::scripted) {
    return out;
  }
  if (!src.file.empty()) {
    auto [lo, hi] = gaze_file_.equal_range(tick_);
    for (auto it = lo; it != hi; ++it) {
      out.push_back(it->second);
    }
    return out;
  }

  const ImageGeometry& geom = scenario_.geometry;
  std::optional<int> branch;
  for (const auto& f : src.schedule) {
    if (probe_.y >= f.from_y_mm) {
      branch = f.branch_id;
    }
  }
  std::optional<PixelPoint> fixation;
  if (branch) {
    fixation = lumen_pixel(cs, *branch, geom);
  }
  // Keep looking where the vessel was last seen while it is out of view.
  if (!fixation) {
    fixation = last_gaze_;
  }
  last_gaze_ = fixation;

  for (const auto& g : src.glances) {
    if (tick_ < g.start_tick || tick_ >= g.start_tick + g.duration_ticks) {
      continue;
    }
    if (g.branch_id) {
      fixation = lumen_pixel(cs, *g.branch_id, geom);
    } else if (fixation) {
      fixation = PixelPoint{fixation->x + g.offset_x_px, fixation->y + g.offset_y_px};
    }
    break;
  }
  if (!fixation) {
    return out;
  }

  Rng rng(tick_seed(scenario_.seed, kGazeStream, tick_));
  for (int k = 0; k < kScriptedSamplesPerTick; ++k) {
    GazeSample s;
    s.x = fixation->x + src.noise_px * rng.normal();
    s.y = fixation->y + src.noise_px * rng.normal();
    s.t = tick_;
    out.push_back(s);
  }
  return out;
}

TickRecord Simulation::step() {
  const CrossSection cs = cross_section(scenario_.phantom.tree, probe_, scenario_.geometry);
  const std::vector<GazeSample> gaze = scripted_gaze(cs);
  return step(gaze);
}

TickRecord Simulation::step(std::span<const GazeSample> gaze) {
  const Scenario& s = scenario_;
  const ImageGeometry& geom = s.geometry;
  const std::int64_t t = tick_;
  TickProducts p;

  p.cross_section = cross_section(s.phantom.tree, probe_, geom);
  const ContactGeometry contact = compute_contact(s.phantom.surface, probe_, geom, s.control.coupling_threshold_mm);
  p.frame = render_bmode(p.cross_section, contact.model, geom, tick_seed(s.seed, kRenderStream, t), s.render);
  p.confidence = confidence_map(p.frame);

  p.gaze = gaze_to_heatmap(gaze, s.heatmap, geom);
  std::vector<Candidate> candidates = detect_candidates(p.frame, p.confidence, s.segmentation);
  tracker_.assign(candidates);
  IntentOutput intent = intention_.step(t, p.gaze, candidates, tick_seed(s.seed, kIntentStream, t));
  p.attention = std::move(intent.heatmap);
  p.segmentation = select_target(std::move(candidates), p.attention, s.segmentation);
  p.truth = rasterize_labels(p.cross_section, geom);

  const StepResult moved = sonoloop::step(probe_, p.confidence, p.segmentation, s.phantom.surface, s.control, s.dt());

  TickRecord rec;
  TickTelemetry& tel = rec.telemetry;
  tel.tick = t;
  tel.x = probe_.x;
  tel.y = probe_.y;
  tel.z = probe_.z;
  tel.theta = probe_.theta;
  tel.force = probe_.force;
  tel.x_c = moved.readout.x_c;
  tel.d_c = moved.readout.d_c;
  tel.theta_c = moved.readout.theta_c;
  tel.degenerate = moved.readout.degenerate;
  tel.correction = s.control.correction_enabled;

  if (const Candidate* sel = p.segmentation.selected_candidate()) {
    tel.target = sel->track_id;
    if (const LabelMask* truth = best_truth(sel->mask, p.truth)) {
      tel.truth_branch = truth->branch_id;
      tel.dice = dice(sel->mask, truth->mask);
    } else {
      tel.dice = 0.0;
    }
    rec.selected_mask = encode_runs(sel->mask);
  }

  rec.frame_digest = digest(p.frame.intensity);
  rec.gaze_digest = digest(p.gaze.values);
  rec.attention_digest = digest(p.attention.values);
  rec.gaze_kind = p.gaze.kind;
  rec.attention_kind = p.attention.kind;
  rec.gaze.assign(gaze.begin(), gaze.end());
  for (const auto& c : p.segmentation.candidates) {
    CandidateSummary summary;
    summary.track_id = c.track_id.value_or(0);
    summary.cx = c.centroid.x;
    summary.cy = c.centroid.y;
    summary.area = c.area;
    if (const LabelMask* truth = best_truth(c.mask, p.truth)) {
      summary.truth_branch = truth->branch_id;
    }
    rec.candidates.push_back(summary);
  }
  const IntentState& st = intention_.state();
  rec.intent_target = st.current_target;
  rec.evidence = st.evidence;
  rec.dwell = st.dwell;
  rec.challenger = st.challenger;
  rec.switched = intent.switched;

  probe_ = moved.probe;
  products_ = std::move(p);
  ++tick_;
  return rec;
}

}  // namespace sonoloop
