#include "sonoloop/record.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include "sonoloop/errors.hpp"

namespace sonoloop {

namespace {

using nlohmann::json;

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t unhex(const json& v) {
  const std::string s = v.get<std::string>();
  if (s.size() != 16 || s.find_first_not_of("0123456789abcdef") != std::string::npos) {
    throw CorruptRecordError("bad digest '" + s + "'");
  }
  return std::stoull(s, nullptr, 16);
}

json opt(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }
json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

template <typename T>
std::optional<T> get_opt(const json& doc, const char* key) {
  const json& v = doc.at(key);
  if (v.is_null()) {
    return std::nullopt;
  }
  return v.get<T>();
}

HeatmapKind kind_from(const std::string& s) {
  for (auto k : {HeatmapKind::pseudo, HeatmapKind::raw_gaze, HeatmapKind::stabilized, HeatmapKind::zero}) {
    if (s == to_string(k)) {
      return k;
    }
  }
  throw CorruptRecordError("unknown heatmap kind '" + s + "'");
}

json telemetry_json(const TickTelemetry& t) {
  return {{"tick", t.tick},       {"x", t.x},
          {"y", t.y},             {"z", t.z},
          {"theta", t.theta},     {"force", t.force},
          {"x_c", t.x_c},         {"d_c", t.d_c},
          {"theta_c", t.theta_c}, {"degenerate", t.degenerate},
          {"correction", t.correction}, {"target", opt(t.target)},
          {"truth_branch", opt(t.truth_branch)}, {"dice", opt(t.dice)}};
}

TickTelemetry telemetry_from(const json& j) {
  TickTelemetry t;
  t.tick = j.at("tick").get<std::int64_t>();
  t.x = j.at("x").get<double>();
  t.y = j.at("y").get<double>();
  t.z = j.at("z").get<double>();
  t.theta = j.at("theta").get<double>();
  t.force = j.at("force").get<double>();
  t.x_c = j.at("x_c").get<double>();
  t.d_c = j.at("d_c").get<double>();
  t.theta_c = j.at("theta_c").get<double>();
  t.degenerate = j.at("degenerate").get<bool>();
  t.correction = j.at("correction").get<bool>();
  t.target = get_opt<int>(j, "target");
  t.truth_branch = get_opt<int>(j, "truth_branch");
  t.dice = get_opt<double>(j, "dice");
  return t;
}

}  // namespace

double TimingStats::mean() const {
  if (tick_ms.empty()) {
    return 0.0;
  }
  return std::accumulate(tick_ms.begin(), tick_ms.end(), 0.0) / static_cast<double>(tick_ms.size());
}

double TimingStats::percentile(double q) const {
  if (tick_ms.empty()) {
    return 0.0;
  }
  std::vector<double> sorted = tick_ms;
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil(std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size())));
  return sorted[std::max<std::size_t>(rank, 1) - 1];
}

double TimingStats::max() const { return tick_ms.empty() ? 0.0 : *std::max_element(tick_ms.begin(), tick_ms.end()); }

Scenario Recording::scenario() const { return parse_scenario(header.scenario); }

json to_json(const TickRecord& r) {
  json gaze = json::array();
  for (const auto& g : r.gaze) {
    gaze.push_back({g.x, g.y, g.t, g.valid});
  }
  json candidates = json::array();
  for (const auto& c : r.candidates) {
    candidates.push_back(
        {{"id", c.track_id}, {"cx", c.cx}, {"cy", c.cy}, {"area", c.area}, {"truth", opt(c.truth_branch)}});
  }
  json evidence = json::array();
  for (const auto& [id, e] : r.evidence) {
    evidence.push_back({id, e});
  }
  json runs = json::array();
  for (const auto& [start, len] : r.selected_mask) {
    runs.push_back({start, len});
  }
  return {{"telemetry", telemetry_json(r.telemetry)},
          {"frame_digest", hex(r.frame_digest)},
          {"gaze_digest", hex(r.gaze_digest)},
          {"attention_digest", hex(r.attention_digest)},
          {"gaze_kind", to_string(r.gaze_kind)},
          {"attention_kind", to_string(r.attention_kind)},
          {"gaze", gaze},
          {"candidates", candidates},
          {"intent_target", opt(r.intent_target)},
          {"evidence", evidence},
          {"dwell", r.dwell},
          {"challenger", opt(r.challenger)},
          {"switched", r.switched},
          {"selected_mask", runs}};
}

TickRecord tick_from_json(const json& j) {
  try {
    TickRecord r;
    r.telemetry = telemetry_from(j.at("telemetry"));
    r.frame_digest = unhex(j.at("frame_digest"));
    r.gaze_digest = unhex(j.at("gaze_digest"));
    r.attention_digest = unhex(j.at("attention_digest"));
    r.gaze_kind = kind_from(j.at("gaze_kind").get<std::string>());
    r.attention_kind = kind_from(j.at("attention_kind").get<std::string>());
    for (const auto& g : j.at("gaze")) {
      r.gaze.push_back({g.at(0).get<double>(), g.at(1).get<double>(), g.at(2).get<std::int64_t>(), g.at(3).get<bool>()});
    }
    for (const auto& c : j.at("candidates")) {
      r.candidates.push_back({c.at("id").get<int>(), c.at("cx").get<double>(), c.at("cy").get<double>(),
                              c.at("area").get<int>(), get_opt<int>(c, "truth")});
    }
    r.intent_target = get_opt<int>(j, "intent_target");
    for (const auto& e : j.at("evidence")) {
      r.evidence.emplace(e.at(0).get<int>(), e.at(1).get<double>());
    }
    r.dwell = j.at("dwell").get<int>();
    r.challenger = get_opt<int>(j, "challenger");
    r.switched = j.at("switched").get<bool>();
    for (const auto& run : j.at("selected_mask")) {
      r.selected_mask.emplace_back(run.at(0).get<std::int64_t>(), run.at(1).get<std::int64_t>());
    }
    return r;
  } catch (const json::exception& e) {
    throw CorruptRecordError(std::string("malformed tick record: ") + e.what());
  }
}

RecordWriter::RecordWriter(std::ostream& out, const Scenario& scenario) : out_(&out) {
  const json header{{"schema_version", kRecordSchemaVersion},
                    {"scenario_hash", scenario_hash(scenario)},
                    {"tick_rate_hz", scenario.tick_rate_hz},
                    {"scenario", scenario_to_json(scenario)},
                    {"created_utc", utc_timestamp()}};
  *out_ << header.dump() << '\n';
}

void RecordWriter::write(const TickRecord& record) {
  if (finished_) {
    throw RecordError("record already finished");
  }
  *out_ << to_json(record).dump() << '\n';
  ++ticks_;
}

void RecordWriter::finish(const TimingStats& timing) {
  if (finished_) {
    return;
  }
  const json trailer{{"end", true},
                     {"ticks", ticks_},
                     {"mean_ms", timing.mean()},
                     {"p99_ms", timing.percentile(0.99)},
                     {"max_ms", timing.max()}};
  *out_ << trailer.dump() << '\n';
  out_->flush();
  finished_ = true;
}

Recording read_recording(std::istream& in) {
  Recording rec;
  std::string line;
  std::int64_t line_no = 0;
  bool have_header = false;
  bool ended = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    if (ended) {
      throw CorruptRecordError("line " + std::to_string(line_no) + ": data after end marker");
    }
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      throw CorruptRecordError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!have_header) {
      if (!doc.is_object() || !doc.contains("schema_version")) {
        throw CorruptRecordError("missing record header");
      }
      if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != kRecordSchemaVersion) {
        throw VersionError("unsupported record schema " + doc["schema_version"].dump());
      }
      try {
        rec.header.schema_version = doc.at("schema_version").get<int>();
        rec.header.scenario_hash = doc.at("scenario_hash").get<std::string>();
        rec.header.tick_rate_hz = doc.at("tick_rate_hz").get<double>();
        rec.header.scenario = doc.at("scenario");
        rec.header.created_utc = doc.at("created_utc").get<std::string>();
      } catch (const json::exception& e) {
        throw CorruptRecordError(std::string("malformed header: ") + e.what());
      }
      have_header = true;
      continue;
    }
    if (doc.is_object() && doc.contains("end")) {
      try {
        rec.trailer.ticks = doc.at("ticks").get<std::int64_t>();
        rec.trailer.mean_ms = doc.at("mean_ms").get<double>();
        rec.trailer.p99_ms = doc.at("p99_ms").get<double>();
        rec.trailer.max_ms = doc.at("max_ms").get<double>();
      } catch (const json::exception& e) {
        throw CorruptRecordError(std::string("malformed end marker: ") + e.what());
      }
      if (rec.trailer.ticks != static_cast<std::int64_t>(rec.ticks.size())) {
        throw CorruptRecordError("end marker tick count does not match the body");
      }
      ended = true;
      continue;
    }
    TickRecord tick = tick_from_json(doc);
    if (tick.telemetry.tick != static_cast<std::int64_t>(rec.ticks.size())) {
      throw CorruptRecordError("line " + std::to_string(line_no) + ": ticks out of sequence");
    }
    rec.ticks.push_back(std::move(tick));
  }
  if (!have_header) {
    throw CorruptRecordError("empty record");
  }
  if (!ended) {
    throw CorruptRecordError("record is truncated (no end marker)");
  }
  return rec;
}

Recording read_recording(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw RecordError("cannot open " + path.string());
  }
  return read_recording(in);
}

ReplayReport replay(const Recording& recording) {
  Scenario scenario = recording.scenario();
  if (scenario_hash(scenario) != recording.header.scenario_hash) {
    throw DigestMismatchError("scenario hash does not match the embedded scenario");
  }
  scenario.gaze.kind = GazeSourceKind::live;
  Simulation sim(std::move(scenario));
  ReplayReport report;
  for (const auto& expected : recording.ticks) {
    const TickRecord actual = sim.step(expected.gaze);
    if (actual == expected) {
      ++report.ticks;
      continue;
    }
    std::string what = "tick " + std::to_string(expected.telemetry.tick) + ": ";
    if (actual.frame_digest != expected.frame_digest) {
      what += "frame digest differs";
    } else if (actual.attention_digest != expected.attention_digest) {
      what += "attention digest differs";
    } else if (!(actual.telemetry == expected.telemetry)) {
      what += "telemetry differs";
    } else {
      what += "record differs";
    }
    throw DigestMismatchError(what);
  }
  return report;
}

RunResult run_scenario(Simulation& sim, std::ostream* record, std::int64_t max_ticks) {
  RunResult result;
  std::optional<RecordWriter> writer;
  if (record) {
    writer.emplace(*record, sim.scenario());
  }
  const std::int64_t limit = max_ticks >= 0 ? max_ticks : sim.scenario().duration_ticks;
  while (sim.tick() < limit) {
    const auto start = std::chrono::steady_clock::now();
    TickRecord rec = sim.step();
    const auto stop = std::chrono::steady_clock::now();
    result.timing.tick_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    if (writer) {
      writer->write(rec);
    }
    result.ticks.push_back(std::move(rec));
  }
  if (writer) {
    writer->finish(result.timing);
  }
  return result;
}

std::string utc_timestamp(std::chrono::system_clock::time_point when) {
  const std::time_t t = std::chrono::system_clock::to_time_t(when);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace sonoloop
