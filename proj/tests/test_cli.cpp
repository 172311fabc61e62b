#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rdn/io/metrics.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("rdn_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Result cli(const std::string& args) {
  const auto log = work_dir() / "stdout.txt";
  const std::string cmd = std::string("\"") + RDN_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = rdn::io::read_text(log);
  return r;
}

std::string smoke_config() { return std::string("\"") + RDN_CONFIG_DIR + "/smoke.json\""; }

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST(Cli, TrainSmokeConfig) {
  const auto out = work_dir() / "train";
  const auto r = cli("train --config " + smoke_config() + " --out \"" + out.string() + "\"");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto run = out / "rdn_r1_s3";
  EXPECT_EQ(rdn::io::read_metrics(run / "metrics.csv").size(), 10u);
  EXPECT_TRUE(fs::exists(run / "config.json"));
  EXPECT_TRUE(fs::exists(run / "manifest.json"));
  EXPECT_TRUE(fs::exists(run / "snapshots" / "critic.bin"));
  EXPECT_NE(r.out.find("run=rdn_r1_s3 strategy=rdn redundant=1 final_win_rate="), std::string::npos) << r.out;
}

TEST(Cli, TrainIsDeterministic) {
  const auto a = work_dir() / "det_a";
  const auto b = work_dir() / "det_b";
  ASSERT_EQ(cli("train --config " + smoke_config() + " --out \"" + a.string() + "\"").code, 0);
  ASSERT_EQ(cli("train --config " + smoke_config() + " --out \"" + b.string() + "\"").code, 0);
  EXPECT_EQ(rdn::io::read_text(a / "rdn_r1_s3" / "metrics.csv"), rdn::io::read_text(b / "rdn_r1_s3" / "metrics.csv"));
}

TEST(Cli, MissingConfigIsUsageError) {
  EXPECT_EQ(cli("train --config \"" + (work_dir() / "nope.json").string() + "\"").code, 2);
  EXPECT_EQ(cli("train").code, 2);
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
}

TEST(Cli, BadOverrideIsUsageError) {
  const auto r = cli("train --config " + smoke_config() + " --override training.gamma=2 --out \"" +
                     (work_dir() / "bad").string() + "\"");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("training.gamma"), std::string::npos) << r.out;
}

TEST(Cli, SweepWritesEveryRunAndSummary) {
  const auto out = work_dir() / "sweep";
  const auto r = cli("sweep --config " + smoke_config() + " --redundant 0,1 --seeds 2 --strategies rdn --jobs 2" +
                     " --override training.episodes=20 --out \"" + out.string() + "\"");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(count(r.out, "run="), 4u) << r.out;
  for (const char* id : {"rdn_r0_s3", "rdn_r0_s4", "rdn_r1_s3", "rdn_r1_s4"}) {
    EXPECT_TRUE(fs::exists(out / id / "metrics.csv")) << id;
  }
  const auto summary = rdn::io::read_text(out / "sweep_summary.csv");
  EXPECT_EQ(count(summary, "\n"), 3u) << summary;
  EXPECT_TRUE(fs::exists(out / "win_rate_r0.svg"));
  EXPECT_TRUE(fs::exists(out / "win_rate_r1.svg"));
  EXPECT_EQ(cli("sweep --config " + smoke_config() + " --redundant 1,x").code, 2);
}

TEST(Cli, EvalRelevanceAndPlot) {
  const auto out = work_dir() / "pipeline";
  ASSERT_EQ(cli("train --config " + smoke_config() + " --out \"" + out.string() + "\"").code, 0);
  const auto run = out / "rdn_r1_s3";
  auto r = cli("eval --run \"" + run.string() + "\" --episodes 50");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("win_rate"), std::string::npos) << r.out;

  r = cli("relevance --run \"" + run.string() + "\" --episodes 3");
  EXPECT_EQ(r.code, 0) << r.out;
  const auto trace = rdn::io::read_text(run / "relevance.jsonl");
  EXPECT_EQ(count(trace, "\n"), 3u);

  r = cli("plot --metric win_rate --out \"" + (out / "w.svg").string() + "\" \"" + run.string() + "\"");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(count(rdn::io::read_text(out / "w.svg"), "<polyline"), 1u);
  EXPECT_EQ(cli("plot --metric bogus --out \"" + (out / "b.svg").string() + "\" \"" + run.string() + "\"").code, 2);
  EXPECT_EQ(cli("eval --run \"" + (out / "missing").string() + "\"").code, 2);
}

TEST(Cli, OracleMode) {
  const auto out = work_dir() / "oracle";
  const auto r = cli("eval --oracle --config " + smoke_config() + " --out \"" + out.string() + "\"");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(rdn::io::read_text(out / "oracle.json").find("\"optimal_value\": 1.0"), std::string::npos);
}

TEST(Cli, CheckPassesAndNegativeControlFails) {
  auto r = cli("check");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(count(r.out, "PASS "), 4u) << r.out;
  EXPECT_EQ(count(r.out, "FAIL "), 0u) << r.out;
  r = cli("check --corrupt-denominator 0.01");
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("FAIL lrp_conservation"), std::string::npos) << r.out;
}

TEST(Cli, HelpAndVersion) {
  EXPECT_EQ(cli("--help").code, 0);
  EXPECT_EQ(cli("--version").code, 0);
}
