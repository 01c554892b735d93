#include <gtest/gtest.h>

#include <sstream>

#include <sonoloop/attention.hpp>
#include <sonoloop/errors.hpp>
#include <sonoloop/random.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace sonoloop;

namespace {

HeatmapParams point_params() {
  HeatmapParams p;
  p.centroid_cov = {};
  p.spread_cov = {};
  p.points = 1;
  return p;
}

}  // namespace

TEST(BoxDiffuse, ImpulseBecomesAnAnchoredPlateau) {
  Image impulses(64, 64);
  impulses(30, 20) = 1.0;
  const Image out = box_diffuse(impulses, 30);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const bool inside = x >= 15 && x <= 44 && y >= 5 && y <= 34;
      ASSERT_EQ(out(x, y), inside ? 1.0 : 0.0) << x << "," << y;
    }
  }
}

TEST(BoxDiffuse, MatchesTheScatterOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    Image impulses(50, 40);
    for (int k = 0; k < 30; ++k) {
      impulses(static_cast<int>(rng.uniform() * 50), static_cast<int>(rng.uniform() * 40)) += 1.0;
    }
    for (int kernel : {1, 4, 7, 30}) {
      const Image got = box_diffuse(impulses, kernel);
      const Image want = oracle::box_scatter(impulses, kernel);
      for (std::size_t i = 0; i < got.size(); ++i) {
        ASSERT_NEAR(got.values()[i], want.values()[i], 1e-9);
      }
    }
  }
  EXPECT_THROW(box_diffuse(Image(4, 4), 0), DomainError);
}

TEST(Heatmap, DegenerateCovarianceGivesTheUnitPlateau) {
  const ImageGeometry g;
  const auto h = diffused_heatmap({100.0, 80.0}, g, point_params(), 1, HeatmapKind::pseudo);
  std::size_t ones = 0;
  for (double v : h.values.values()) {
    ASSERT_TRUE(v == 0.0 || v == 1.0);
    ones += v == 1.0;
  }
  EXPECT_EQ(ones, 900u);
  EXPECT_EQ(h.values(85, 65), 1.0);
  EXPECT_EQ(h.values(114, 94), 1.0);
  EXPECT_EQ(h.values(115, 80), 0.0);
}

TEST(Heatmap, MaxNormalizedAndDeterministic) {
  const ImageGeometry g;
  const Mask label = fixture::disc(g, 120, 90, 20);
  const auto a = generate_pseudo_heatmap(label, HeatmapParams{}, 17);
  const auto b = generate_pseudo_heatmap(label, HeatmapParams{}, 17);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.kind, HeatmapKind::pseudo);
  double peak = 0.0;
  for (double v : a.values.values()) {
    ASSERT_GE(v, 0.0);
    peak = std::max(peak, v);
  }
  EXPECT_EQ(peak, 1.0);
}

TEST(Heatmap, SamplesOffTheImageClampToTheBorder) {
  const ImageGeometry g{64, 64, 0.15};
  const auto h = diffused_heatmap({-500.0, 30.0}, g, point_params(), 1, HeatmapKind::pseudo);
  EXPECT_EQ(h.values(0, 30), 1.0);
  EXPECT_EQ(h.values(14, 30), 1.0);
  EXPECT_EQ(h.values(15, 30), 0.0);
}

TEST(Heatmap, EmptyLabelIsRejected) {
  EXPECT_THROW(generate_pseudo_heatmap(Mask(32, 32, 0), HeatmapParams{}, 1), DomainError);
}

TEST(Heatmap, ZeroFractionModeFrequency) {
  const ImageGeometry g{64, 64, 0.15};
  const Mask label = fixture::disc(g, 32, 32, 6);
  int zeros = 0;
  const int n = 2000;
  for (int s = 0; s < n; ++s) {
    if (sample_training_heatmap(label, HeatmapParams{}, static_cast<std::uint64_t>(s)).kind == HeatmapKind::zero) {
      ++zeros;
    }
  }
  EXPECT_NEAR(static_cast<double>(zeros) / n, 0.10, 0.02);
  HeatmapParams never;
  never.zero_fraction = 0.0;
  EXPECT_EQ(sample_training_heatmap(label, never, 3).kind, HeatmapKind::pseudo);
}

TEST(Heatmap, ParamsValidation) {
  HeatmapParams p;
  p.points = 0;
  EXPECT_THROW(p.validate(), DomainError);
  p = {};
  p.zero_fraction = 1.5;
  EXPECT_THROW(p.validate(), DomainError);
  p = {};
  p.spread_cov.xx = -1.0;
  EXPECT_THROW(p.validate(), DomainError);
}

TEST(GazeHeatmap, EmptyOrOffImageGivesZeroKind) {
  const ImageGeometry g{64, 64, 0.15};
  EXPECT_EQ(gaze_to_heatmap({}, HeatmapParams{}, g).kind, HeatmapKind::zero);
  const std::vector<GazeSample> off{{-3.0, 10.0, 0, true}, {10.0, 70.0, 0, true}, {10.0, 10.0, 0, false}};
  const auto h = gaze_to_heatmap(off, HeatmapParams{}, g);
  EXPECT_EQ(h.kind, HeatmapKind::zero);
  for (double v : h.values.values()) {
    ASSERT_EQ(v, 0.0);
  }
}

TEST(GazeHeatmap, RepeatedHitsAccumulate) {
  const ImageGeometry g{128, 128, 0.15};
  HeatmapParams p;
  p.kernel = 1;
  const std::vector<GazeSample> s{{10.0, 10.0, 0, true}, {10.0, 10.0, 0, true}, {50.0, 50.0, 0, true}};
  const auto h = gaze_to_heatmap(s, p, g);
  EXPECT_EQ(h.kind, HeatmapKind::raw_gaze);
  EXPECT_EQ(h.values(10, 10), 1.0);
  EXPECT_EQ(h.values(50, 50), 0.5);
}

TEST(Argmax, FirstMaximumInRasterOrder) {
  Image img(4, 4);
  img(2, 1) = 3.0;
  img(1, 3) = 3.0;
  EXPECT_EQ(argmax(img), (PixelIndex{2, 1}));
}

TEST(GazeStream, RoundTripAndValidation) {
  const std::vector<GazeSample> samples{{1.5, 2.25, 0, true}, {0.1, 7.0, 0, false}, {3.0, 4.0, 2, true}};
  std::stringstream io;
  write_gaze_stream(io, samples);
  const auto back = read_gaze_stream(io);
  EXPECT_EQ(back, samples);

  std::istringstream decreasing("3,1,1,1\n2,1,1,1\n");
  EXPECT_THROW(read_gaze_stream(decreasing), DomainError);
  std::istringstream malformed("# comment\n1,2\n");
  EXPECT_THROW(read_gaze_stream(malformed), DomainError);
}
