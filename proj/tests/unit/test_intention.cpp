#include <gtest/gtest.h>

#include <sonoloop/errors.hpp>
#include <sonoloop/intention.hpp>

#include "fixtures.hpp"

using namespace sonoloop;

namespace {

const ImageGeometry kGeom;
const std::vector<PixelPoint> kCenters{{64, 100}, {192, 100}};

class Operator {
 public:
  Operator() : estimator_(IntentParams{}), candidates_(fixture::disc_candidates(kGeom, kCenters, 18)) {}

  IntentOutput look_at(std::optional<PixelPoint> where) {
    std::vector<GazeSample> gaze;
    if (where) {
      gaze = fixture::gaze_at(where->x, where->y, tick_, 4, 3.0, static_cast<std::uint64_t>(tick_));
    }
    return estimator_.step(tick_++, gaze_to_heatmap(gaze, HeatmapParams{}, kGeom), candidates_, 0);
  }
  IntentOutput look_at_candidate(int index) { return look_at(kCenters[static_cast<std::size_t>(index)]); }

  IntentionEstimator& estimator() { return estimator_; }
  std::vector<Candidate>& candidates() { return candidates_; }

 private:
  IntentionEstimator estimator_;
  std::vector<Candidate> candidates_;
  std::int64_t tick_ = 0;
};

}  // namespace

TEST(History, BoundedAndOrdered) {
  HistoryBuffer h(3);
  for (int t = 0; t < 5; ++t) {
    h.push(HistoryEntry{t, zero_heatmap(kGeom), {}, {}});
  }
  EXPECT_EQ(h.size(), 3u);
  EXPECT_EQ(h.entries().front().tick, 2);
  EXPECT_THROW(h.push(HistoryEntry{1, zero_heatmap(kGeom), {}, {}}), DomainError);
  h.set_emitted_target(7);
  EXPECT_EQ(h.latest().emitted_target, 7);
  EXPECT_THROW(HistoryBuffer(3).set_emitted_target(1), DomainError);
}

TEST(IntentParams, Validation) {
  IntentParams p;
  p.switch_dwell = 100;
  EXPECT_THROW(p.validate(), DomainError);
  p = {};
  p.gaze_weight = 0.9;
  EXPECT_THROW(p.validate(), DomainError);
}

TEST(Intention, FirstGazeAcquiresImmediately) {
  Operator op;
  const auto out = op.look_at_candidate(1);
  EXPECT_EQ(out.state.current_target, 2);
  EXPECT_EQ(out.heatmap.kind, HeatmapKind::stabilized);
  EXPECT_FALSE(out.switched);
}

TEST(Intention, NoGazeMeansNoTarget) {
  Operator op;
  const auto out = op.look_at(std::nullopt);
  EXPECT_FALSE(out.state.current_target);
  EXPECT_EQ(out.heatmap.kind, HeatmapKind::zero);
}

TEST(Intention, StabilizedHeatmapIsCenteredOnTheTarget) {
  Operator op;
  const auto out = op.look_at_candidate(0);
  const PixelIndex peak = argmax(out.heatmap.values);
  EXPECT_NEAR(peak.x, kCenters[0].x, 40.0);
  EXPECT_NEAR(peak.y, kCenters[0].y, 40.0);
}

TEST(Intention, ShortGlancesDoNotSwitch) {
  Operator op;
  for (int t = 0; t < 80; ++t) {
    op.look_at_candidate(0);
  }
  for (int glance = 0; glance < 5; ++glance) {
    for (int t = 0; t < 20; ++t) {
      EXPECT_FALSE(op.look_at_candidate(1).switched);
    }
    for (int t = 0; t < 20; ++t) {
      op.look_at_candidate(0);
    }
  }
  EXPECT_EQ(op.estimator().state().current_target, 1);
}

TEST(Intention, SustainedLookSwitchesAfterExactlyTheDwell) {
  Operator op;
  for (int t = 0; t < 80; ++t) {
    op.look_at_candidate(0);
  }
  for (int t = 1; t <= 40; ++t) {
    const auto out = op.look_at_candidate(1);
    if (t < 32) {
      ASSERT_FALSE(out.switched) << t;
      EXPECT_EQ(out.state.dwell, t);
      EXPECT_EQ(out.state.challenger, 2);
      EXPECT_EQ(out.state.current_target, 1);
    } else if (t == 32) {
      EXPECT_TRUE(out.switched);
      EXPECT_EQ(out.state.current_target, 2);
    } else {
      EXPECT_FALSE(out.switched);
      EXPECT_EQ(out.state.current_target, 2);
    }
  }
}

TEST(Intention, LookingAwayKeepsTheTargetUntilTheWindowEmpties) {
  Operator op;
  for (int t = 0; t < 10; ++t) {
    op.look_at_candidate(0);
  }
  for (int t = 0; t < 63; ++t) {
    EXPECT_EQ(op.look_at(std::nullopt).state.current_target, 1);
  }
  const auto out = op.look_at(std::nullopt);
  EXPECT_FALSE(out.state.current_target);
  EXPECT_EQ(out.heatmap.kind, HeatmapKind::zero);
}

TEST(Intention, TargetMissingLongerThanTheWindowIsDropped) {
  Operator op;
  op.look_at_candidate(0);
  // Only candidate 2 remains; gaze stays on empty tissue where candidate 1 was.
  op.candidates().erase(op.candidates().begin());
  std::optional<int> target;
  int ticks = 0;
  do {
    target = op.look_at(PixelPoint{64, 100}).state.current_target;
    ++ticks;
  } while (target == 1 && ticks < 200);
  EXPECT_EQ(ticks, 65);
  EXPECT_FALSE(target);
}

TEST(Intention, ResetForgetsEverything) {
  Operator op;
  op.look_at_candidate(0);
  op.estimator().reset();
  EXPECT_EQ(op.estimator().state(), IntentState{});
  EXPECT_TRUE(op.estimator().history().empty());
}

TEST(Intention, EvidenceCombinesGazeShareAndHistory) {
  Operator op;
  const auto out = op.look_at_candidate(0);
  // All the gaze mass sits inside the first candidate's dilated mask; no emitted history yet.
  EXPECT_NEAR(out.state.evidence.at(1), 0.7, 1e-12);
  EXPECT_NEAR(out.state.evidence.at(2), 0.0, 1e-12);
  const auto next = op.look_at_candidate(0);
  EXPECT_NEAR(next.state.evidence.at(1), 0.7 + 0.3 * 0.5, 1e-12);
}
