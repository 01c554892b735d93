// sonoloop: headless driver for the gaze-guided scanning simulator.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sonoloop/analysis.hpp"
#include "sonoloop/errors.hpp"
#include "sonoloop/record.hpp"
#include "sonoloop/scenario.hpp"
#include "sonoloop/server.hpp"
#include "sonoloop/simulation.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

sonoloop::Scenario load(const std::string& path, std::optional<std::uint64_t> seed, std::optional<std::string> correction,
                        std::optional<std::string> gaze) {
  sonoloop::Scenario s = sonoloop::load_scenario(path);
  if (seed) {
    s.seed = *seed;
  }
  if (correction) {
    s.control.correction_enabled = *correction == "on";
  }
  if (gaze) {
    s.gaze.kind = sonoloop::GazeSourceKind::scripted;
    s.gaze.file = *gaze;
  }
  return s;
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, std::optional<std::int64_t> ticks,
            const std::string& record, std::optional<std::string> correction, std::optional<std::string> gaze) {
  sonoloop::Scenario scenario = load(path, seed, correction, gaze);
  if (ticks) {
    scenario.duration_ticks = *ticks;
  }
  sonoloop::Simulation sim(scenario);
  spdlog::info("running '{}' for {} ticks (seed {})", scenario.name, scenario.duration_ticks, scenario.seed);

  std::ofstream out;
  if (!record.empty()) {
    out.open(record);
    if (!out) {
      throw std::runtime_error("cannot write " + record);
    }
  }
  const sonoloop::RunResult result = sonoloop::run_scenario(sim, record.empty() ? nullptr : &out);
  sonoloop::RunSummary summary = sonoloop::summarize(result.ticks);
  summary.timing = sonoloop::RecordTrailer{static_cast<std::int64_t>(result.ticks.size()), result.timing.mean(),
                                           result.timing.percentile(0.99), result.timing.max()};
  std::cout << sonoloop::to_json(summary).dump(2) << '\n';
  return 0;
}

int cmd_replay(const std::string& path) {
  const sonoloop::Recording rec = sonoloop::read_recording(path);
  const sonoloop::ReplayReport report = sonoloop::replay(rec);
  std::cout << "replayed " << report.ticks << " ticks, telemetry identical\n";
  return 0;
}

int cmd_metrics(const std::string& path) {
  const sonoloop::Recording rec = sonoloop::read_recording(path);
  std::cout << sonoloop::to_json(sonoloop::summarize(rec)).dump(2) << '\n';
  return 0;
}

int cmd_reconstruct(const std::string& path, const std::string& format, const std::string& output) {
  const sonoloop::Recording rec = sonoloop::read_recording(path);
  std::ofstream file;
  if (!output.empty()) {
    file.open(output);
    if (!file) {
      throw std::runtime_error("cannot write " + output);
    }
  }
  std::ostream& out = output.empty() ? std::cout : file;
  if (format == "csv") {
    sonoloop::write_reconstruction_csv(out, sonoloop::reconstruct(rec));
  } else {
    sonoloop::write_boundary_ply(out, rec.ticks, rec.scenario().geometry);
  }
  return 0;
}

int cmd_serve(const std::string& path, const std::string& bind, bool unpaced) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) {
    throw sonoloop::ValidationError({"--bind: expected host:port"});
  }
  sonoloop::ServerOptions options;
  options.host = bind.substr(0, colon);
  try {
    const int port = std::stoi(bind.substr(colon + 1));
    if (port < 0 || port > 65535) {
      throw std::out_of_range("port");
    }
    options.port = static_cast<std::uint16_t>(port);
  } catch (const std::logic_error&) {
    throw sonoloop::ValidationError({"--bind: invalid port"});
  }
  options.paced = !unpaced;

  sonoloop::Server server(sonoloop::load_scenario(path), options);
  server.start();
  std::cout << "listening on " << options.host << ':' << server.port() << std::endl;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_interrupted) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("sonoloop"));
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("SONOLOOP_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }

  CLI::App app{"Gaze-guided robotic ultrasound scanning simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> ticks;
  std::string record;
  std::optional<std::string> correction;
  std::optional<std::string> gaze;
  auto* run = app.add_subcommand("run", "Run a scenario headless");
  run->add_option("scenario", scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--ticks", ticks, "Override the number of ticks")->check(CLI::NonNegativeNumber);
  run->add_option("--record", record, "Write a run record (JSON Lines)");
  run->add_option("--correction", correction, "Orientation correction")->check(CLI::IsMember({"on", "off"}));
  run->add_option("--gaze", gaze, "Scripted gaze file (CSV t,x,y,valid)")->check(CLI::ExistingFile);

  std::string record_path;
  auto* replay = app.add_subcommand("replay", "Re-run a record and verify it bit-exactly");
  replay->add_option("record", record_path, "Run record")->required()->check(CLI::ExistingFile);

  auto* metrics = app.add_subcommand("metrics", "Summarize a run record");
  metrics->add_option("record", record_path, "Run record")->required()->check(CLI::ExistingFile);

  std::string format = "csv";
  std::string output;
  auto* recon = app.add_subcommand("reconstruct", "Export the followed vessel in world coordinates");
  recon->add_option("record", record_path, "Run record")->required()->check(CLI::ExistingFile);
  recon->add_option("--format", format, "csv (centroid polylines) or mesh-points (PLY boundary cloud)")
      ->check(CLI::IsMember({"csv", "mesh-points"}));
  recon->add_option("-o,--output", output, "Output file (default stdout)");

  std::string bind = "127.0.0.1:8765";
  bool unpaced = false;
  auto* serve = app.add_subcommand("serve", "Serve a live session over TCP");
  serve->add_option("scenario", scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  serve->add_option("--bind", bind, "host:port");
  serve->add_flag("--unpaced", unpaced, "Tick as fast as possible");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (*run) {
      return cmd_run(scenario_path, seed, ticks, record, correction, gaze);
    }
    if (*replay) {
      return cmd_replay(record_path);
    }
    if (*metrics) {
      return cmd_metrics(record_path);
    }
    if (*recon) {
      return cmd_reconstruct(record_path, format, output);
    }
    if (*serve) {
      return cmd_serve(scenario_path, bind, unpaced);
    }
  } catch (const sonoloop::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    for (const auto& issue : e.issues()) {
      std::cerr << "  " << issue << '\n';
    }
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
