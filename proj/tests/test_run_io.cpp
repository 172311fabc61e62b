#include <gtest/gtest.h>

#include <filesystem>
#include <limits>
#include <regex>
#include <sstream>

#include "rdn/io/config.hpp"
#include "rdn/io/manifest.hpp"
#include "rdn/io/metrics.hpp"
#include "rdn/io/run_dir.hpp"
#include "rdn/io/svg.hpp"
#include "rdn/io/trace.hpp"

using namespace rdn;
using namespace rdn::io;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("rdn_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<train::MetricsRow> sample_rows(int n) {
  std::vector<train::MetricsRow> rows;
  Rng rng(3);
  for (int k = 0; k < n; ++k) {
    train::MetricsRow r;
    r.episode = 10 * (k + 1);
    r.win_rate = rng.uniform();
    r.mean_return = rng.uniform(-1, 2);
    r.critic_loss = 1.0 / 3.0 * rng.uniform();
    r.agent_loss = rng.uniform() * 1e-7;
    r.conservation_residual = rng.uniform() * 1e-17;
    r.epsilon = 0.1 + 0.2;
    r.essential_mean_abs_rel = rng.uniform(0, 5);
    r.redundant_mean_abs_rel = 0.0;
    r.wall_ms = 0.0;
    rows.push_back(r);
  }
  return rows;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST(Config, MinimalDocumentIsDefaulted) {
  const auto c = from_json(Json::parse(R"({"env": {"kind": "signal_levers", "n_essential": 2}})"));
  train::RunConfig expected;
  expected.env.n_essential = 2;
  EXPECT_EQ(c, expected);
}

TEST(Config, StrategyShorthand) {
  const auto c = from_json(Json::parse(R"({"strategy": "vdn"})"));
  EXPECT_EQ(c.strategy, marl::StrategyKind::vdn);
}

TEST(Config, BadGammaNamesThePath) {
  try {
    from_json(Json::parse(R"({"training": {"gamma": 1.5}})"));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("training.gamma"), std::string::npos) << e.what();
  }
}

TEST(Config, WrongTypeNamesThePath) {
  try {
    from_json(Json::parse(R"({"training": {"batch_size": "big"}})"));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("training.batch_size"), std::string::npos) << e.what();
  }
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(from_json(Json::parse(R"({"training": {"gamma": 0.9, "gama": 0.9}})")), ConfigError);
  EXPECT_THROW(from_json(Json::parse(R"({"extra": 1})")), ConfigError);
}

TEST(Config, OverrideAppliesDottedPath) {
  Json doc = Json::parse(R"({"training": {"seed": 3}})");
  apply_override(doc, "training.seed=7");
  apply_override(doc, "strategy.kind=iql");
  apply_override(doc, "env.kind=piano_corridor");
  const auto c = from_json(doc);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.strategy, marl::StrategyKind::iql);
  EXPECT_EQ(c.env.kind, env::EnvKind::piano_corridor);
  EXPECT_THROW(apply_override(doc, "no_equals_sign"), ConfigError);
}

TEST(Config, OverrideWidensStringSection) {
  Json doc = Json::parse(R"({"strategy": "vdn"})");
  apply_override(doc, "strategy.target_sync=50");
  const auto c = from_json(doc);
  EXPECT_EQ(c.strategy, marl::StrategyKind::vdn);
  EXPECT_EQ(c.target_sync, 50);
}

TEST(Config, NormalizeIsIdempotent) {
  const Json doc = Json::parse(R"({"env": {"kind": "piano_corridor", "n_redundant": 2}, "strategy": "iql",
                                   "lrp": {"rule": "epsilon", "epsilon": 0.01}})");
  const Json once = normalize(doc);
  EXPECT_EQ(normalize(once), once);
  EXPECT_EQ(from_json(once), from_json(doc));
}

TEST(Config, RoundTripsEveryField) {
  train::RunConfig c;
  c.env.kind = env::EnvKind::piano_corridor;
  c.env.horizon = 12;
  c.strategy = marl::StrategyKind::vdn;
  c.critic_input = marl::CriticInput::full_state;
  c.decompose_target = true;
  c.agent_hidden = {8, 4};
  c.lrp = lrp::LrpRule::alpha_beta(2.0, 1.0);
  c.gamma = 0.95;
  c.optimizer = OptimizerKind::sgd;
  c.seed = 1234567890123ULL;
  c.scalar = train::ScalarWidth::f32;
  c.snapshots = false;
  c.wall_clock = true;
  EXPECT_EQ(from_json(to_json(c)), c);
}

TEST(Config, LoadFileWithOverrides) {
  const auto dir = temp_dir("config");
  write_text(dir / "c.json", R"({"training": {"episodes": 50, "eval_interval": 10}})");
  const auto c = load_config(dir / "c.json", {"training.seed=9"});
  EXPECT_EQ(c.episodes, 50);
  EXPECT_EQ(c.seed, 9u);
  write_text(dir / "bad.json", "{not json");
  EXPECT_THROW(load_config(dir / "bad.json"), ConfigError);
  EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
  fs::remove_all(dir);
}

TEST(Metrics, HeaderPlusOneLinePerRow) {
  const auto csv = metrics_csv(sample_rows(10));
  EXPECT_EQ(count(csv, "\n"), 11u);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kMetricsHeader);
}

TEST(Metrics, ExactRoundTrip) {
  const auto rows = sample_rows(10);
  EXPECT_EQ(parse_metrics(metrics_csv(rows)), rows);
}

TEST(Metrics, ExtremeValuesRoundTrip) {
  std::vector<train::MetricsRow> rows(1);
  rows[0].critic_loss = std::numeric_limits<double>::max();
  rows[0].agent_loss = std::numeric_limits<double>::denorm_min();
  rows[0].mean_return = -0.0;
  EXPECT_EQ(parse_metrics(metrics_csv(rows)), rows);
}

TEST(Metrics, EmptyRowsGiveHeaderOnly) {
  const auto csv = metrics_csv({});
  EXPECT_EQ(csv, std::string(kMetricsHeader) + "\n");
  EXPECT_TRUE(parse_metrics(csv).empty());
}

TEST(Metrics, MalformedInputIsIoError) {
  EXPECT_THROW(parse_metrics("episode,win_rate\n1,0.5\n"), IoError);
  EXPECT_THROW(parse_metrics(std::string(kMetricsHeader) + "\n1,2,3\n"), IoError);
  EXPECT_THROW(parse_metrics(std::string(kMetricsHeader) + "\n1,x,0,0,0,0,0,0,0,0\n"), IoError);
}

TEST(Metrics, UnknownMetricNameListsChoices) {
  try {
    metric_value(train::MetricsRow{}, "loss");
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("win_rate"), std::string::npos);
  }
}

TEST(Trace, OneLinePerRecordAndRoundTrip) {
  const auto dir = temp_dir("trace");
  std::vector<RelevanceRecord> recs;
  for (int t = 0; t < 3; ++t) {
    RelevanceRecord r;
    r.episode = 4;
    r.t = t;
    r.q_tot = 0.1 * t + 1.0 / 3.0;
    r.per_agent = {0.25, -1e-300, 7.0 / 9.0};
    r.unattributed = 0.0;
    r.bias_absorbed = {0.5, -0.125};
    r.residual = 1e-17;
    recs.push_back(r);
  }
  write_relevance_trace(recs, dir / "relevance.jsonl");
  const auto text = read_text(dir / "relevance.jsonl");
  EXPECT_EQ(count(text, "\n"), 3u);
  std::istringstream lines(text);
  std::string line;
  for (const auto& r : recs) {
    std::getline(lines, line);
    EXPECT_EQ(record_from_json(Json::parse(line)), r);
  }
  EXPECT_EQ(read_relevance_trace(dir / "relevance.jsonl"), recs);
  write_relevance_trace({}, dir / "empty.jsonl");
  EXPECT_TRUE(read_relevance_trace(dir / "empty.jsonl").empty());
  fs::remove_all(dir);
}

TEST(Trace, RecordFromReportConserves) {
  lrp::RelevanceReport<double> rep;
  rep.q_tot = 2.0;
  rep.per_agent = {1.5, 0.25};
  rep.unattributed = 0.125;
  rep.bias_absorbed = {0.125};
  rep.conservation_residual = 0.0;
  const auto r = make_record(1, 2, rep);
  double sum = r.unattributed + r.total_bias_absorbed();
  for (double v : r.per_agent) sum += v;
  EXPECT_EQ(sum, r.q_tot);
}

TEST(Manifest, HashDetectsEdits) {
  const auto dir = temp_dir("manifest");
  train::RunConfig c;
  c.snapshots = false;
  const auto now = std::chrono::system_clock::now();
  const auto rec = write_run_directory(dir, c, sample_rows(4), nullptr, now, now);
  const auto m = read_manifest(dir / "manifest.json");
  EXPECT_EQ(m.metrics_sha256, rec.metrics_sha256);
  EXPECT_TRUE(verify_manifest(m, dir / "metrics.csv"));
  EXPECT_TRUE(m.has_final_row);
  EXPECT_EQ(m.final_row, sample_rows(4).back());
  EXPECT_EQ(from_json(m.config), c);
  EXPECT_TRUE(std::regex_match(m.started_at, std::regex(R"(\d{4}-\d\d-\d\dT\d\d:\d\d:\d\dZ)")));

  auto text = read_text(dir / "metrics.csv");
  text[text.size() - 2] = text[text.size() - 2] == '0' ? '1' : '0';
  write_text(dir / "metrics.csv", text);
  EXPECT_FALSE(verify_manifest(m, dir / "metrics.csv"));
  fs::remove_all(dir);
}

TEST(Manifest, KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Manifest, EmptyRunHasNullFinalMetrics) {
  const auto dir = temp_dir("manifest_empty");
  train::RunConfig c;
  const auto now = std::chrono::system_clock::now();
  write_run_directory(dir, c, {}, nullptr, now, now);
  const auto j = read_json_file(dir / "manifest.json");
  EXPECT_TRUE(j.at("final_metrics").is_null());
  EXPECT_FALSE(read_manifest(dir / "manifest.json").has_final_row);
  fs::remove_all(dir);
}

TEST(RunDir, SnapshotsReload) {
  const auto dir = temp_dir("snap");
  train::RunConfig c;
  c.env.n_essential = 2;
  c.agent_hidden = {8};
  c.critic_hidden = {8};
  c.episodes = 20;
  c.eval_interval = 10;
  c.eval_episodes = 5;
  c.warmup = 16;
  c.batch_size = 8;
  const auto out = train::run(c);
  const auto now = std::chrono::system_clock::now();
  write_run_directory(dir, c, out.rows, &out, now, now);
  EXPECT_TRUE(fs::exists(agent_snapshot(dir, 1)));
  EXPECT_TRUE(fs::exists(critic_snapshot(dir)));
  const auto loaded = load_strategy<double>(c, dir);
  const auto& original = *std::get<std::shared_ptr<marl::Strategy<double>>>(out.strategy);
  for (int i = 0; i < 2; ++i) {
    for (std::size_t l = 0; l < original.agents().net(i).layer_count(); ++l) {
      EXPECT_EQ(loaded->agents().net(i).layer(l).weight, original.agents().net(i).layer(l).weight);
    }
  }
  auto wider = c;
  wider.agent_hidden = {9};
  EXPECT_THROW(load_strategy<double>(wider, dir), ConfigError);
  fs::remove_all(dir);
}

TEST(Svg, OnePolylinePerRun) {
  const auto dir = temp_dir("svg");
  std::vector<fs::path> runs;
  for (int k = 0; k < 4; ++k) {
    fs::create_directories(dir / ("run" + std::to_string(k)));
    write_metrics(sample_rows(10), dir / ("run" + std::to_string(k)) / "metrics.csv");
    runs.push_back(dir / ("run" + std::to_string(k)) / "metrics.csv");
  }
  emit_svg_curves("win_rate", {runs.front()}, dir / "one.svg");
  const auto one = read_text(dir / "one.svg");
  EXPECT_EQ(count(one, "<polyline"), 1u);
  std::smatch m;
  ASSERT_TRUE(std::regex_search(one, m, std::regex("points=\"([^\"]*)\"")));
  EXPECT_EQ(count(m[1].str(), ",") , 10u);
  EXPECT_NE(one.find("run0"), std::string::npos);

  emit_svg_curves("critic_loss", runs, dir / "four.svg");
  EXPECT_EQ(count(read_text(dir / "four.svg"), "<polyline"), 4u);
  EXPECT_THROW(emit_svg_curves("episode", runs, dir / "x.svg"), UsageError);
  EXPECT_THROW(emit_svg_curves("nope", runs, dir / "x.svg"), UsageError);
  fs::remove_all(dir);
}

TEST(Svg, WinRateAxisClampedToUnitInterval) {
  Series s{"a", {1, 2, 3}, {-0.5, 0.5, 1.5}};
  ChartOptions opt;
  opt.clamp_unit = true;
  const auto svg = render_svg({s}, opt);
  std::smatch m;
  ASSERT_TRUE(std::regex_search(svg, m, std::regex("points=\"([^\"]*)\"")));
  std::istringstream pts(m[1].str());
  std::string pt;
  std::vector<double> ys;
  while (pts >> pt) ys.push_back(std::stod(pt.substr(pt.find(',') + 1)));
  ASSERT_EQ(ys.size(), 3u);
  EXPECT_DOUBLE_EQ(ys[0], 380.0);  // y = 0 at the bottom of the plot area
  EXPECT_DOUBLE_EQ(ys[2], 40.0);   // y = 1 at the top
  EXPECT_DOUBLE_EQ(ys[1], 210.0);
}

TEST(Svg, EscapesNames) {
  Series s{"a<b&c", {1}, {0.5}};
  const auto svg = render_svg({s}, ChartOptions{});
  EXPECT_NE(svg.find("a&lt;b&amp;c"), std::string::npos);
}
