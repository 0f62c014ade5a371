// obstacle_sim: run scenarios, calibrate from correspondences, run the
// built-in ten-object benchmark.
//
// Exit status: 0 all picks succeeded, 1 run finished with pick failures,
// 2 invalid input, 3 internal error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "obstacle_removal/benchmark.hpp"
#include "obstacle_removal/serialization.hpp"

namespace fs = std::filesystem;
using namespace obstacle_removal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPickFailures = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitInternal = 3;

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << text;
}

void print_summary(const RunReport& report) {
  for (const auto& r : report.records) {
    std::cout << "  " << r.id << " (" << to_string(r.object_class) << "): " << to_string(r.outcome);
    if (!r.attribution.empty()) {
      std::cout << " [";
      for (std::size_t i = 0; i < r.attribution.size(); ++i) std::cout << (i ? ", " : "") << to_string(r.attribution[i]);
      std::cout << "]";
    }
    std::cout << '\n';
  }
  for (const auto& n : report.notes) std::cout << "  note: " << n << '\n';
  std::cout << "succeeded " << report.succeeded << " of " << report.attempted << '\n';
}

int run_and_write(SimulationConfig cfg, const std::optional<fs::path>& out, bool dump_frames) {
  cfg.retain_frames = dump_frames;
  Pipeline pipeline(cfg);
  pipeline.run();
  const RunReport report = pipeline.report();
  if (out) {
    fs::create_directories(*out);
    write_file(*out / "report.json", report_to_json(report, cfg, &pipeline.bus()).dump(2) + "\n");
    std::ofstream log(*out / "messages.ndjson", std::ios::binary);
    if (!log) throw Error(ErrorCode::InvalidArgument, "cannot write messages.ndjson");
    write_message_log(log, pipeline.bus());
    if (dump_frames) write_frame_dumps(*out / "frames", pipeline.bus());
  }
  print_summary(report);
  return report.succeeded == report.attempted ? kExitOk : kExitPickFailures;
}

int cmd_simulate(const fs::path& scenario, const fs::path& out, std::optional<std::uint64_t> seed,
                 bool dump_frames, bool adaptive) {
  SimulationConfig cfg = load_scenario(scenario);
  if (seed) cfg.seed = *seed;
  if (adaptive) cfg.arm.adaptive_order = true;
  return run_and_write(std::move(cfg), out, dump_frames);
}

int cmd_calibrate(const fs::path& pairs_file) {
  std::ifstream in(pairs_file);
  if (!in) throw Error(ErrorCode::InvalidArgument, pairs_file.string() + ": cannot open");
  const auto pairs = parse_correspondences(in);
  const RigidTransform T = estimate_rigid_transform(pairs);
  std::cout << transform_to_json(T, rms_residual(T, pairs)).dump(2) << '\n';
  return kExitOk;
}

int cmd_benchmark(const std::optional<fs::path>& out, bool adaptive) {
  SimulationConfig cfg = builtin_benchmark_config(adaptive);
  if (const auto issues = cfg.issues(); !issues.empty()) {
    std::cerr << "error: built-in benchmark scenario is invalid: " << issues.front().path << ": "
              << issues.front().message << '\n';
    return kExitInternal;
  }
  return run_and_write(std::move(cfg), out, false);
}

bool is_input_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidArgument:
    case ErrorCode::TooFewPoints:
    case ErrorCode::DegenerateConfiguration:
      return true;
    default:
      return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Obstacle removal pipeline simulator"};
  app.require_subcommand(1);

  fs::path scenario, out_dir, pairs;
  std::optional<std::uint64_t> seed;
  bool dump_frames = false, adaptive = false, table1 = false;

  auto* simulate = app.add_subcommand("simulate", "Run a scenario file");
  simulate->add_option("--scenario", scenario, "Scenario JSON file")->required();
  simulate->add_option("--out", out_dir, "Output directory for report.json and messages.ndjson")->required();
  simulate->add_option("--seed", seed, "Override the scenario's seed");
  simulate->add_flag("--dump-frames", dump_frames, "Write per-frame PGM/PPM images under OUT/frames");
  simulate->add_flag("--adaptive-order", adaptive, "Descend before moving above near the reach boundary");

  auto* calibrate = app.add_subcommand("calibrate", "Estimate the camera-to-arm transform");
  calibrate->add_option("--pairs", pairs, "Correspondence file: camera xyz then arm xyz per row")->required();

  auto* benchmark = app.add_subcommand("benchmark", "Run the built-in ten-object benchmark");
  benchmark->add_flag("--paper-table1", table1, "Select the ten-object benchmark (the only one built in)")
      ->required();
  benchmark->add_option("--out", out_dir, "Output directory for report.json and messages.ndjson");
  benchmark->add_flag("--adaptive-order", adaptive, "Descend before moving above near the reach boundary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*simulate) return cmd_simulate(scenario, out_dir, seed, dump_frames, adaptive);
    if (*calibrate) return cmd_calibrate(pairs);
    return cmd_benchmark(out_dir.empty() ? std::nullopt : std::optional<fs::path>(out_dir), adaptive);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_input_error(e.code()) ? kExitInvalid : kExitInternal;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
