#include <benchmark/benchmark.h>

#include <limits>
#include <string>

#include <sonoloop/attention.hpp>
#include <sonoloop/imaging.hpp>
#include <sonoloop/phantom.hpp>
#include <sonoloop/scenario.hpp>
#include <sonoloop/segmentation.hpp>
#include <sonoloop/simulation.hpp>

using namespace sonoloop;

namespace {

Scenario bench_scenario(const char* name) {
  return load_scenario(std::string(SONOLOOP_SCENARIO_DIR) + "/" + name + ".json");
}

struct Frame {
  Scenario scenario = bench_scenario("flat_straight");
  Simulation sim{scenario};
  Frame() { sim.step(); }
  const TickProducts& products() const { return sim.products(); }
};

const Frame& frame() {
  static const Frame f;
  return f;
}

}  // namespace

static void BM_Render(benchmark::State& state) {
  const auto& p = frame().products();
  const auto& s = frame().scenario;
  const ContactModel contact = full_contact(s.geometry, s.control.coupling_threshold_mm);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_bmode(p.cross_section, contact, s.geometry, ++seed, s.render));
  }
}
BENCHMARK(BM_Render)->Unit(benchmark::kMillisecond);

static void BM_ConfidenceMap(benchmark::State& state) {
  const auto& p = frame().products();
  for (auto _ : state) {
    benchmark::DoNotOptimize(confidence_map(p.frame));
  }
}
BENCHMARK(BM_ConfidenceMap)->Unit(benchmark::kMicrosecond);

static void BM_BoxDiffuse(benchmark::State& state) {
  const auto& s = frame().scenario;
  Image impulses = make_image(s.geometry);
  for (int i = 0; i < 200; ++i) {
    impulses((i * 37) % s.geometry.width_px, (i * 91) % s.geometry.depth_px) = 1.0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(box_diffuse(impulses, s.heatmap.kernel));
  }
}
BENCHMARK(BM_BoxDiffuse)->Unit(benchmark::kMicrosecond);

static void BM_DetectCandidates(benchmark::State& state) {
  const auto& p = frame().products();
  const auto& s = frame().scenario;
  for (auto _ : state) {
    benchmark::DoNotOptimize(detect_candidates(p.frame, p.confidence, s.segmentation));
  }
}
BENCHMARK(BM_DetectCandidates)->Unit(benchmark::kMicrosecond);

static void BM_FullTick(benchmark::State& state) {
  Scenario s = bench_scenario("bifurcation");
  s.duration_ticks = std::numeric_limits<std::int64_t>::max();
  Simulation sim(s);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim.step());
  }
}
BENCHMARK(BM_FullTick)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
