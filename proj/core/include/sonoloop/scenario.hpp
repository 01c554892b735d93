#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sonoloop/attention.hpp"
#include "sonoloop/control.hpp"
#include "sonoloop/imaging.hpp"
#include "sonoloop/intention.hpp"
#include "sonoloop/phantom.hpp"
#include "sonoloop/segmentation.hpp"

namespace sonoloop {

inline constexpr int kScenarioSchemaVersion = 1;

enum class GazeSourceKind { none, scripted, live };

/// Scripted operator: from the given probe advance onward, look at a branch.
struct GazeFixation {
  double from_y_mm = 0.0;
  int branch_id = 0;

  bool operator==(const GazeFixation&) const = default;
};

/// A short look away. Targets a branch when one is given, otherwise a fixed
/// pixel offset from where the operator is currently looking.
struct GazeGlance {
  std::int64_t start_tick = 0;
  int duration_ticks = 0;
  std::optional<int> branch_id;
  double offset_x_px = 0.0;
  double offset_y_px = 0.0;

  bool operator==(const GazeGlance&) const = default;
};

struct GazeSource {
  GazeSourceKind kind = GazeSourceKind::none;
  std::filesystem::path file;  // line-delimited gaze records; takes precedence over the schedule
  std::vector<GazeFixation> schedule;
  std::vector<GazeGlance> glances;
  double noise_px = 3.0;

  bool operator==(const GazeSource&) const = default;
};

struct Scenario {
  int schema_version = kScenarioSchemaVersion;
  std::string name;
  PhantomModel phantom;
  ImageGeometry geometry;
  RenderParams render;
  HeatmapParams heatmap;
  IntentParams intention;
  SegmentationParams segmentation;
  ControlParams control;
  ProbeState initial_probe;  // z and force are set by seating the probe at target force
  GazeSource gaze;
  std::int64_t duration_ticks = 0;
  std::uint64_t seed = 0;
  double tick_rate_hz = 30.0;

  double dt() const noexcept { return 1.0 / tick_rate_hz; }
};

/// Parses and validates. Relative gaze file paths resolve against base_dir.
/// Throws ValidationError listing every issue with its JSON path.
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

/// Canonical, fully explicit form; parse_scenario(scenario_to_json(s)) == s.
nlohmann::json scenario_to_json(const Scenario& scenario);

/// Hex FNV-1a of the canonical dump.
std::string scenario_hash(const Scenario& scenario);

}  // namespace sonoloop
