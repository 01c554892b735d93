#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sonoloop/scenario.hpp"
#include "sonoloop/simulation.hpp"

namespace sonoloop {

inline constexpr int kRecordSchemaVersion = 1;

/// Wall-clock cost of each tick, in milliseconds.
struct TimingStats {
  std::vector<double> tick_ms;

  double mean() const;
  double percentile(double q) const;  // nearest-rank, q in [0, 1]
  double max() const;
};

struct RecordHeader {
  int schema_version = kRecordSchemaVersion;
  std::string scenario_hash;
  double tick_rate_hz = 30.0;
  nlohmann::json scenario;
  std::string created_utc;
};

struct RecordTrailer {
  std::int64_t ticks = 0;
  double mean_ms = 0.0;
  double p99_ms = 0.0;
  double max_ms = 0.0;
};

/// A run on disk: JSON Lines with a header, one line per tick and an end marker.
struct Recording {
  RecordHeader header;
  std::vector<TickRecord> ticks;
  RecordTrailer trailer;

  /// Reparses the embedded scenario. Throws ValidationError.
  Scenario scenario() const;
};

nlohmann::json to_json(const TickRecord& record);
TickRecord tick_from_json(const nlohmann::json& doc);

class RecordWriter {
 public:
  RecordWriter(std::ostream& out, const Scenario& scenario);

  void write(const TickRecord& record);
  void finish(const TimingStats& timing);

 private:
  std::ostream* out_;
  std::int64_t ticks_ = 0;
  bool finished_ = false;
};

/// Throws CorruptRecordError on malformed or truncated input and VersionError
/// on an unsupported schema.
Recording read_recording(std::istream& in);
Recording read_recording(const std::filesystem::path& path);

struct ReplayReport {
  std::int64_t ticks = 0;
};

/// Re-runs the recorded scenario feeding back the recorded gaze and checks each
/// tick against the record. Throws DigestMismatchError at the first difference.
ReplayReport replay(const Recording& recording);

/// Runs a scenario to completion, optionally recording, and returns every tick.
struct RunResult {
  std::vector<TickRecord> ticks;
  TimingStats timing;
};

RunResult run_scenario(Simulation& sim, std::ostream* record = nullptr, std::int64_t max_ticks = -1);

std::string utc_timestamp(std::chrono::system_clock::time_point when = std::chrono::system_clock::now());

}  // namespace sonoloop
