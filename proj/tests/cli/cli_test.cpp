// End-to-end checks of the bqr executable: exit codes and artifacts.
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("bqr_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs `bqr <args>` with output captured to a log file; returns the exit code.
  int run(const std::string& args) {
    const std::string cmd = std::string(BQR_CLI_PATH) + " " + args + " > " +
                            (dir_ / "log.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  // Non-comment lines of a CSV file.
  static std::vector<std::string> rows(const std::string& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line[0] != '#') out.push_back(line);
    }
    return out;
  }

  std::string log() const { return slurp((dir_ / "log.txt").string()); }

  fs::path dir_;
};

TEST_F(Cli, SimulateIsDeterministic) {
  ASSERT_EQ(run("simulate --id D2 --n 50 --seed 4 --out " + path("a.csv")), 0) << log();
  ASSERT_EQ(run("simulate --id D2 --n 50 --seed 4 --out " + path("b.csv")), 0) << log();
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  const auto r = rows(path("a.csv"));
  ASSERT_EQ(r.size(), 51u);
  EXPECT_EQ(r[0], "x,label,latent");
}

TEST_F(Cli, UnknownDatasetIsAValidationError) {
  EXPECT_EQ(run("simulate --id D9 --out " + path("a.csv")), 2);
  EXPECT_NE(log().find("D9"), std::string::npos);
}

TEST_F(Cli, BadFlagIsAUsageError) {
  EXPECT_EQ(run("train --no-such-flag"), 2);
}

TEST_F(Cli, TrainWritesArtifactsAndEvaluateReadsThem) {
  ASSERT_EQ(run("train --id D1 --n 300 --epochs 4 --out " + path("run")), 0) << log();
  EXPECT_TRUE(fs::exists(path("run/checkpoint.json")));
  EXPECT_TRUE(fs::exists(path("run/config.json")));
  EXPECT_EQ(rows(path("run/trace.csv")).size(), 5u);

  const auto ckpt = nlohmann::json::parse(slurp(path("run/checkpoint.json")));
  EXPECT_EQ(ckpt["format"], "bqr-checkpoint");
  EXPECT_EQ(ckpt["grid"].size(), 9u);

  ASSERT_EQ(run("evaluate --checkpoint " + path("run/checkpoint.json") +
                " --id D1 --n 300 --out " + path("ev")),
            0)
      << log();
  const auto summary = nlohmann::json::parse(slurp(path("ev/summary.json")));
  EXPECT_EQ(summary["checkpoint_config_hash"], ckpt["metadata"]["config_hash"]);
  EXPECT_TRUE(fs::exists(path("ev/coverage.csv")));
  EXPECT_TRUE(fs::exists(path("ev/delta_report.csv")));
}

TEST_F(Cli, DivergenceExitsThreeWithPartialTrace) {
  EXPECT_EQ(run("train --id D1 --n 200 --epochs 20 --lr 1e300 --out " + path("run")), 3);
  EXPECT_TRUE(fs::exists(path("run/trace.csv")));
  EXPECT_FALSE(fs::exists(path("run/checkpoint.json")));
}

TEST_F(Cli, EvaluateWithoutLatentSkipsCoverage) {
  ASSERT_EQ(run("train --id D1 --n 200 --epochs 2 --out " + path("run")), 0) << log();
  std::ofstream(path("plain.csv")) << "x,label\n0.1,1\n-0.5,0\n0.7,1\n-0.2,0\n";
  ASSERT_EQ(run("evaluate --checkpoint " + path("run/checkpoint.json") + " --csv " +
                path("plain.csv") + " --split all --out " + path("ev")),
            0)
      << log();
  EXPECT_NE(log().find("coverage skipped"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("ev/coverage.csv")));
  EXPECT_TRUE(fs::exists(path("ev/delta_report.csv")));
  const auto summary = nlohmann::json::parse(slurp(path("ev/summary.json")));
  EXPECT_TRUE(summary["coverage"].is_null());
  EXPECT_EQ(summary["rows"], 4);
}

TEST_F(Cli, NoiseFractionAboveHalfIsRejected) {
  EXPECT_EQ(run("noise-sweep --id D1 --fractions 0.6 --out " + path("n.csv")), 2);
}

TEST_F(Cli, SmoothOfConstantNetworkReturnsTheConstant) {
  // One input, one hidden unit, three levels; every output equals its bias.
  nlohmann::json ckpt = {{"format", "bqr-checkpoint"}, {"version", 1},
                         {"kind", "bqr"},              {"lambda", 1.0},
                         {"input_dim", 1},             {"trunk_widths", {1}},
                         {"grid", {0.25, 0.5, 0.75}},  {"param_count", 8},
                         {"params", {0, 0, 0, 0, 0, 1.5, 1.5, 1.5}},
                         {"metadata", nlohmann::json::object()}};
  std::ofstream(path("c.json")) << ckpt.dump();
  std::ofstream(path("in.csv")) << "x\n0.1\n-0.3\n";
  ASSERT_EQ(run("smooth --checkpoint " + path("c.json") + " --input " + path("in.csv") +
                " --out " + path("s.csv")),
            0)
      << log();
  const auto r = rows(path("s.csv"));
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].rfind("row,label,delta,mean,variance,pi_low,pi_high,qs_0.00", 0), 0u);
  for (std::size_t i = 1; i < r.size(); ++i) {
    std::vector<std::string> cells;
    std::stringstream ss(r[i]);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    EXPECT_NEAR(std::stod(cells[3]), 1.5, 1e-12);
    EXPECT_NEAR(std::stod(cells[4]), 0.0, 1e-12);
  }
}

TEST_F(Cli, FlagsOverrideConfigFile) {
  std::ofstream(path("cfg.json")) << R"({"dataset": {"n": 200}, "train": {"epochs": 5}})";
  ASSERT_EQ(run("train --config " + path("cfg.json") + " --epochs 2 --out " + path("run")), 0)
      << log();
  EXPECT_EQ(rows(path("run/trace.csv")).size(), 3u);
  const auto cfg = nlohmann::json::parse(slurp(path("run/config.json")))["config"];
  EXPECT_EQ(cfg["train"]["epochs"], 2);
  EXPECT_EQ(cfg["dataset"]["n"], 200);
}

TEST_F(Cli, UnknownConfigSectionIsRejected) {
  std::ofstream(path("cfg.json")) << R"({"trian": {"epochs": 5}})";
  EXPECT_EQ(run("train --config " + path("cfg.json") + " --out " + path("run")), 2);
}

}  // namespace
