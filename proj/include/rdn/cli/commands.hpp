#pragma once

#include <charconv>
#include <cstdio>
#include <chrono>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rdn/check.hpp"
#include "rdn/env/oracle.hpp"
#include "rdn/errors.hpp"
#include "rdn/io/config.hpp"
#include "rdn/io/manifest.hpp"
#include "rdn/io/metrics.hpp"
#include "rdn/io/run_dir.hpp"
#include "rdn/io/svg.hpp"
#include "rdn/io/trace.hpp"
#include "rdn/lrp/relevance.hpp"
#include "rdn/train/trainer.hpp"

namespace rdn::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Shortest round-trip decimal form.
inline std::string short_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string summary_line(const train::RunConfig& c, double final_win_rate) {
  return "run=" + c.run_id() + " strategy=" + marl::to_string(c.strategy) +
         " redundant=" + std::to_string(c.env.n_redundant) + " final_win_rate=" + short_double(final_win_rate);
}

/// Maps exceptions onto exit codes: configuration and usage problems -> 2,
/// everything else -> 1.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

inline std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma - start);
    int v = 0;
    const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || r.ec != std::errc() || r.ptr != item.data() + item.size() || v < 0) {
      throw UsageError(flag + ": '" + item + "' is not a non-negative integer");
    }
    out.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::vector<marl::StrategyKind> parse_strategy_list(const std::string& text) {
  std::vector<marl::StrategyKind> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma - start);
    try {
      out.push_back(marl::parse_strategy(item));
    } catch (const ConfigError& e) {
      throw UsageError(std::string("--strategies: ") + e.what());
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline train::RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides,
                                        const std::optional<std::uint64_t>& seed) {
  if (path.empty()) throw ConfigError("--config is required");
  if (!fs::exists(path)) throw ConfigError("config file '" + path + "' does not exist");
  auto config = io::load_config(path, overrides);
  if (seed) config.seed = *seed;
  return config;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "runs";
  std::vector<std::string> overrides;
};

inline int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto config = load_run_config(opt.config, opt.overrides, opt.seed);
    const auto started = std::chrono::system_clock::now();
    const auto result = train::run(config);
    const auto finished = std::chrono::system_clock::now();
    io::write_run_directory(fs::path(opt.out) / config.run_id(), config, result.rows, &result, started, finished);
    out << summary_line(config, result.final_win_rate()) << "\n";
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOptions {
  std::string config;
  std::string redundant = "20,15,10,0";
  int seeds = 5;
  std::string strategies = "rdn,vdn,iql";
  int jobs = 1;
  std::string out = "sweep";
  std::vector<std::string> overrides;
};

inline std::string sweep_summary_csv(const train::SweepResult& r) {
  std::string s = "strategy,redundant,median,iqr\n";
  for (const auto& c : r.cells) {
    s += marl::to_string(c.strategy) + "," + std::to_string(c.redundant) + "," + io::format_double(c.median) + "," +
         io::format_double(c.iqr) + "\n";
  }
  return s;
}

/// Per redundant count: win-rate curves of every run, and for RDN runs the
/// essential and redundant mean |relevance| per evaluation block.
inline void write_sweep_plots(const train::SweepResult& r, const std::vector<int>& counts, const fs::path& out) {
  for (int count : counts) {
    std::vector<fs::path> files;
    std::vector<io::Series> separation;
    for (const auto& rec : r.runs) {
      if (rec.config.env.n_redundant != count || !rec.ok()) continue;
      files.push_back(out / rec.config.run_id() / "metrics.csv");
      if (rec.config.strategy != marl::StrategyKind::rdn) continue;
      io::Series ess{rec.config.run_id() + " essential", {}, {}};
      io::Series red{rec.config.run_id() + " redundant", {}, {}};
      for (const auto& row : rec.rows) {
        ess.x.push_back(static_cast<double>(row.episode));
        ess.y.push_back(row.essential_mean_abs_rel);
        red.x.push_back(static_cast<double>(row.episode));
        red.y.push_back(row.redundant_mean_abs_rel);
      }
      separation.push_back(std::move(ess));
      if (count > 0) separation.push_back(std::move(red));
    }
    const std::string suffix = "_r" + std::to_string(count) + ".svg";
    if (!files.empty()) io::emit_svg_curves("win_rate", files, out / ("win_rate" + suffix));
    if (!separation.empty()) {
      io::ChartOptions opt;
      opt.title = "RDN mean |relevance| per agent group, redundant=" + std::to_string(count);
      opt.y_label = "mean |Q~|";
      io::write_text(out / ("relevance_separation" + suffix), io::render_svg(separation, opt));
    }
  }
}

inline int cmd_sweep(const SweepOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto counts = parse_int_list(opt.redundant, "--redundant");
    const auto strategies = parse_strategy_list(opt.strategies);
    if (opt.seeds < 1) throw UsageError("--seeds must be >= 1");
    if (opt.jobs < 1) throw UsageError("--jobs must be >= 1");
    const auto base = load_run_config(opt.config, opt.overrides, std::nullopt);
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < opt.seeds; ++i) seeds.push_back(base.seed + static_cast<std::uint64_t>(i));

    const fs::path root(opt.out);
    fs::create_directories(root);
    auto sink = [&](const train::SweepRunRecord& rec, const train::RunOutput* output) {
      if (!rec.ok()) return;
      io::write_run_directory(root / rec.config.run_id(), rec.config, rec.rows, output, rec.started,
                              std::chrono::system_clock::now());
    };
    const auto result = train::sweep(base, counts, seeds, strategies, opt.jobs, sink);

    for (const auto& rec : result.runs) {
      if (rec.ok()) {
        out << summary_line(rec.config, rec.final_win_rate()) << "\n";
      } else {
        out << "run=" << rec.config.run_id() << " strategy=" << marl::to_string(rec.config.strategy)
            << " redundant=" << rec.config.env.n_redundant << " error=\"" << rec.error << "\"\n";
      }
    }
    io::write_text(root / "sweep_summary.csv", sweep_summary_csv(result));
    write_sweep_plots(result, counts, root);

    if (!result.all_ok()) {
      for (const auto& c : result.cells) {
        if (c.failures > 0) {
          err << "cell strategy=" << marl::to_string(c.strategy) << " redundant=" << c.redundant << ": " << c.failures
              << " of " << seeds.size() << " runs failed\n";
        }
      }
      return kExitFailure;
    }
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string run;     // run directory holding config.json and snapshots/
  std::string config;  // only with --oracle
  bool oracle = false;
  int episodes = 0;  // 0 = the config's eval_episodes
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

inline train::RunConfig load_run_dir_config(const std::string& run) {
  if (run.empty()) throw ConfigError("--run is required");
  const fs::path cfg = fs::path(run) / "config.json";
  if (!fs::exists(cfg)) throw ConfigError("'" + cfg.string() + "' does not exist");
  return io::load_config(cfg);
}

template <typename T>
train::EvalResult evaluate_snapshots(const train::RunConfig& config, const fs::path& run_dir, int episodes,
                                     std::uint64_t seed) {
  auto strategy = io::load_strategy<T>(config, run_dir);
  train::GreedyPolicy<T> policy(strategy->agents());
  return train::evaluate(config.env, policy, episodes, Rng(seed).child("evaluate"));
}

inline int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.oracle) {
      const auto config = load_run_config(opt.config, opt.overrides, std::nullopt);
      const auto result = env::enumerate_oracle(config.env);
      const fs::path dir(opt.out.empty() ? "." : opt.out);
      fs::create_directories(dir);
      io::write_text(dir / "oracle.json", io::oracle_json(config.env, result).dump(2) + "\n");
      out << "oracle env=" << env::to_string(config.env.kind) << " optimal_value=" << short_double(result.optimal_value)
          << "\n";
      return kExitOk;
    }
    const auto config = load_run_dir_config(opt.run);
    if (opt.episodes < 0) throw UsageError("--episodes must be >= 1");
    const int episodes = opt.episodes == 0 ? config.eval_episodes : opt.episodes;
    const std::uint64_t seed = opt.seed.value_or(config.seed);
    const auto r = config.scalar == train::ScalarWidth::f64 ? evaluate_snapshots<double>(config, opt.run, episodes, seed)
                                                            : evaluate_snapshots<float>(config, opt.run, episodes, seed);
    out << "run=" << config.run_id() << " strategy=" << marl::to_string(config.strategy)
        << " redundant=" << config.env.n_redundant << " episodes=" << r.episodes
        << " win_rate=" << short_double(r.win_rate) << " mean_return=" << short_double(r.mean_return) << "\n";
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// relevance

struct RelevanceOptions {
  std::string run;
  int episodes = 5;
  std::optional<std::uint64_t> seed;
  std::string out;  // defaults to the run directory
};

/// Greedy replay of a trained RDN run; every step's joint action is
/// decomposed by the online critic.
template <typename T>
std::vector<io::RelevanceRecord> replay_relevance(const train::RunConfig& config, const fs::path& run_dir, int episodes,
                                                  std::uint64_t seed) {
  if (config.strategy != marl::StrategyKind::rdn) {
    throw UsageError("relevance needs an rdn run (this run uses " + marl::to_string(config.strategy) + ")");
  }
  if (!fs::exists(io::critic_snapshot(run_dir))) {
    throw ConfigError("missing critic snapshot '" + io::critic_snapshot(run_dir).string() + "'");
  }
  auto strategy = io::load_strategy<T>(config, run_dir);
  const auto& critic = *strategy->critic();
  const auto& bank = strategy->agents();
  auto environment = env::make_environment(config.env);
  Rng rng = Rng(seed).child("relevance");
  marl::ObservationStack stack(bank.layout());
  std::vector<io::RelevanceRecord> records;
  for (int e = 0; e < episodes; ++e) {
    auto obs = environment->reset(rng);
    stack.reset(obs);
    for (int t = 0;; ++t) {
      const auto inputs = stack.inputs<T>();
      const auto actions = bank.greedy(inputs);
      Vector<T> state(static_cast<Eigen::Index>(obs.state.size()));
      for (std::size_t k = 0; k < obs.state.size(); ++k) state(static_cast<Eigen::Index>(k)) = static_cast<T>(obs.state[k]);
      auto [q, cache] = critic.critic_forward(inputs, state, actions, false);
      const auto report = lrp::lrp_backward(critic.online(), cache, config.lrp, &critic.slices());
      records.push_back(io::make_record(e, t, report));
      auto step = environment->step(actions);
      if (step.terminal) break;
      stack.push(step.next);
      obs = std::move(step.next);
    }
  }
  return records;
}

inline int cmd_relevance(const RelevanceOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto config = load_run_dir_config(opt.run);
    if (opt.episodes < 1) throw UsageError("--episodes must be >= 1");
    const std::uint64_t seed = opt.seed.value_or(config.seed);
    const auto records = config.scalar == train::ScalarWidth::f64
                             ? replay_relevance<double>(config, opt.run, opt.episodes, seed)
                             : replay_relevance<float>(config, opt.run, opt.episodes, seed);
    const fs::path dir(opt.out.empty() ? opt.run : opt.out);
    fs::create_directories(dir);
    io::write_relevance_trace(records, dir / "relevance.jsonl");
    double residual = 0.0;
    for (const auto& r : records) residual += std::abs(r.residual);
    out << "run=" << config.run_id() << " records=" << records.size()
        << " mean_abs_residual=" << short_double(records.empty() ? 0.0 : residual / records.size()) << "\n";
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// plot

struct PlotOptions {
  std::string metric = "win_rate";
  std::vector<std::string> runs;  // metrics.csv files or run directories
  std::string out = "curves.svg";
};

inline int cmd_plot(const PlotOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.runs.empty()) throw UsageError("plot needs at least one metrics file or run directory");
    std::vector<fs::path> files;
    for (const auto& r : opt.runs) {
      fs::path p(r);
      if (fs::is_directory(p)) p /= "metrics.csv";
      if (!fs::exists(p)) throw ConfigError("'" + p.string() + "' does not exist");
      files.push_back(p);
    }
    const fs::path target(opt.out);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    io::emit_svg_curves(opt.metric, files, target);
    out << "plot metric=" << opt.metric << " runs=" << files.size() << " path=" << target.string() << "\n";
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// check

struct CheckCommandOptions {
  std::uint64_t seed = 2024;
  double corrupt_denominator = 0.0;
};

inline int cmd_check(const CheckCommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    check::CheckOptions co;
    co.seed = opt.seed;
    co.denominator_skew = opt.corrupt_denominator;
    bool ok = true;
    for (const auto& r : check::run_checks(co)) {
      ok = ok && r.pass;
      char secs[32];
      std::snprintf(secs, sizeof secs, "%.2f", r.seconds);
      out << (r.pass ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ", " << secs << " s)\n";
    }
    return ok ? kExitOk : kExitFailure;
  });
}

}  // namespace rdn::cli
