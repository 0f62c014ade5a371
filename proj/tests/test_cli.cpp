#include <gtest/gtest.h>
#include <sys/wait.h>

#include <Eigen/Dense>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "obstacle_removal/serialization.hpp"

namespace fs = std::filesystem;
using obstacle_removal::Json;

namespace {

struct Invocation {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("obstacle_sim_cli_") + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Invocation run(const std::string& args) {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + OBSTACLE_SIM + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                            err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Invocation r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

const std::string kScenario = std::string(TEST_SCENARIO_DIR) + "/two_objects.json";

bool has(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

}  // namespace

TEST_F(CliTest, SimulateWritesReportAndLog) {
  const Invocation r = run("simulate --scenario " + kScenario + " --out " + (dir_ / "o").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(has(r.out, "succeeded 2 of 2")) << r.out;
  const Json report = Json::parse(slurp(dir_ / "o" / "report.json"));
  EXPECT_EQ(report["succeeded"], 2);
  EXPECT_EQ(report["seed"], 3);
  std::istringstream log(slurp(dir_ / "o" / "messages.ndjson"));
  std::string line;
  std::size_t n = 0;
  while (std::getline(log, line)) {
    EXPECT_TRUE(Json::parse(line).contains("topic"));
    ++n;
  }
  EXPECT_GT(n, 100u);
}

TEST_F(CliTest, SimulateIsByteIdenticalAcrossRuns) {
  ASSERT_EQ(run("simulate --scenario " + kScenario + " --out " + (dir_ / "a").string()).code, 0);
  ASSERT_EQ(run("simulate --scenario " + kScenario + " --out " + (dir_ / "b").string()).code, 0);
  EXPECT_EQ(slurp(dir_ / "a" / "report.json"), slurp(dir_ / "b" / "report.json"));
  EXPECT_EQ(slurp(dir_ / "a" / "messages.ndjson"), slurp(dir_ / "b" / "messages.ndjson"));
}

TEST_F(CliTest, SeedOverride) {
  ASSERT_EQ(run("simulate --scenario " + kScenario + " --seed 11 --out " + (dir_ / "o").string()).code, 0);
  const Json report = Json::parse(slurp(dir_ / "o" / "report.json"));
  EXPECT_EQ(report["seed"], 11);
  EXPECT_EQ(report["config"]["seed"], 11);
}

TEST_F(CliTest, PickFailureExitsOne) {
  const fs::path s = write("biased.json", R"({
    "seed": 1,
    "camera": {"noise": {"object_bias": {"b": 0.02}}},
    "ugv": {"start": [0, 0], "end": [1.5, 0]},
    "objects": [{"id": "b", "class": "brick", "dims": {"length": 0.2, "width": 0.095, "height": 0.057},
                 "pose": {"x": 1.0, "y": -0.35, "yaw": 0.0}}]
  })");
  const Invocation r = run("simulate --scenario " + s.string() + " --out " + (dir_ / "o").string());
  EXPECT_EQ(r.code, 1) << r.err;
  EXPECT_TRUE(has(r.out, "MissedGrasp")) << r.out;
  EXPECT_TRUE(has(r.out, "[Camera]")) << r.out;
  EXPECT_TRUE(has(r.out, "succeeded 0 of 1")) << r.out;
}

TEST_F(CliTest, InvalidScenarioExitsTwo) {
  const Invocation high = run("simulate --scenario " + write("high.json", R"({"camera": {"height_m": 1.6}})").string() +
                       " --out " + (dir_ / "o").string());
  EXPECT_EQ(high.code, 2);
  EXPECT_TRUE(has(high.err, "camera.height_m")) << high.err;
  EXPECT_FALSE(fs::exists(dir_ / "o" / "report.json"));

  const Invocation unknown = run("simulate --scenario " + write("typo.json", R"({"sed": 4})").string() + " --out " +
                          (dir_ / "o").string());
  EXPECT_EQ(unknown.code, 2);
  EXPECT_TRUE(has(unknown.err, "sed")) << unknown.err;

  EXPECT_EQ(run("simulate --scenario " + (dir_ / "missing.json").string() + " --out " + (dir_ / "o").string()).code,
            2);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("simulate --scenario " + kScenario).code, 2);
  EXPECT_EQ(run("benchmark").code, 2);
  EXPECT_EQ(run("fly").code, 2);
  // --out naming an existing regular file cannot become a directory.
  const fs::path blocker = write("blocker", "x");
  EXPECT_EQ(run("simulate --scenario " + kScenario + " --out " + blocker.string()).code, 2);
}

TEST_F(CliTest, DumpFramesWritesNetpbm) {
  const fs::path s = write("short.json", R"({"ugv": {"start": [0, 0], "end": [0.1, 0]}})");
  const Invocation r = run("simulate --scenario " + s.string() + " --dump-frames --out " + (dir_ / "o").string());
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t depth = 0, rgb = 0, mask = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "o" / "frames")) {
    const std::string name = e.path().filename().string();
    const std::string bytes = slurp(e.path());
    if (name.ends_with("_depth.pgm")) {
      ++depth;
      const std::string header = "P5\n512 256\n65535\n";
      ASSERT_EQ(bytes.substr(0, header.size()), header) << name;
      EXPECT_EQ(bytes.size(), header.size() + 512u * 256u * 2u);
      // Bare floor: 1.2 m everywhere, big-endian millimeters.
      EXPECT_EQ(static_cast<unsigned char>(bytes[header.size()]), 1200 >> 8);
      EXPECT_EQ(static_cast<unsigned char>(bytes[header.size() + 1]), 1200 & 0xff);
    } else if (name.ends_with("_rgb.ppm") || name.ends_with("_mask.ppm")) {
      ++(name.ends_with("_rgb.ppm") ? rgb : mask);
      const std::string header = "P6\n512 256\n255\n";
      ASSERT_EQ(bytes.substr(0, header.size()), header) << name;
      EXPECT_EQ(bytes.size(), header.size() + 512u * 256u * 3u);
    }
  }
  EXPECT_GT(depth, 0u);
  EXPECT_EQ(depth, rgb);
  EXPECT_EQ(depth, mask);
}

TEST_F(CliTest, CalibrateRecoversKnownTransform) {
  const Eigen::Matrix3d R = (Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitZ()) *
                             Eigen::AngleAxisd(M_PI, Eigen::Vector3d::UnitX()))
                                .toRotationMatrix();
  const Eigen::Vector3d t(0.35, -0.35, 1.05);
  std::ostringstream pairs;
  pairs.precision(17);
  pairs << "# camera xyz, arm xyz\n";
  for (const Eigen::Vector3d p : {Eigen::Vector3d(0, 0, 1), Eigen::Vector3d(0.2, 0.1, 1.1),
                                  Eigen::Vector3d(-0.3, 0.2, 0.9), Eigen::Vector3d(0.1, -0.4, 1.2),
                                  Eigen::Vector3d(0.5, 0.5, 1.0)}) {
    const Eigen::Vector3d q = R * p + t;
    pairs << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << q.x() << ' ' << q.y() << ' ' << q.z() << '\n';
  }
  const Invocation r = run("calibrate --pairs " + write("pairs.txt", pairs.str()).string());
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  for (int i = 0; i < 9; ++i) EXPECT_NEAR(j["R"][i].get<double>(), R(i / 3, i % 3), 1e-9) << i;
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(j["t"][i].get<double>(), t(i), 1e-9) << i;
  EXPECT_LT(j["rms_residual"].get<double>(), 1e-9);
}

TEST_F(CliTest, CalibrateRejectsBadInput) {
  const Invocation collinear = run("calibrate --pairs " +
                            write("line.txt", "0 0 0 1 1 1\n1 1 1 2 2 2\n2 2 2 3 3 3\n3 3 3 4 4 4\n").string());
  EXPECT_EQ(collinear.code, 2);
  EXPECT_TRUE(has(collinear.err, "degenerate configuration")) << collinear.err;

  const Invocation few = run("calibrate --pairs " + write("few.txt", "0 0 0 1 1 1\n1 0 0 2 1 1\n").string());
  EXPECT_EQ(few.code, 2);
  EXPECT_TRUE(has(few.err, "too few points")) << few.err;

  const Invocation malformed = run("calibrate --pairs " + write("bad.txt", "0 0 0 1 1\n").string());
  EXPECT_EQ(malformed.code, 2);
  EXPECT_TRUE(has(malformed.err, "line 1")) << malformed.err;

  EXPECT_EQ(run("calibrate --pairs " + (dir_ / "nope.txt").string()).code, 2);
}

TEST_F(CliTest, BenchmarkReportsSevenOfTen) {
  const Invocation r = run("benchmark --paper-table1 --out " + (dir_ / "o").string());
  EXPECT_EQ(r.code, 1) << r.err;
  EXPECT_TRUE(has(r.out, "succeeded 7 of 10")) << r.out;
  const Json report = Json::parse(slurp(dir_ / "o" / "report.json"));
  EXPECT_EQ(report["attempted"], 10);
  EXPECT_EQ(report["succeeded"], 7);
}

TEST_F(CliTest, BenchmarkAdaptiveOrderReportsEightOfTen) {
  const Invocation r = run("benchmark --paper-table1 --adaptive-order");
  EXPECT_EQ(r.code, 1) << r.err;
  EXPECT_TRUE(has(r.out, "succeeded 8 of 10")) << r.out;
}
