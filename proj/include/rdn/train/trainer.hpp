#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "rdn/env/envs.hpp"
#include "rdn/marl/agents.hpp"
#include "rdn/marl/replay.hpp"
#include "rdn/marl/strategy.hpp"
#include "rdn/train/run_config.hpp"

namespace rdn::train {

/// Acting interface used by evaluation.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void begin_episode(const env::JointObservation& first) = 0;
  virtual std::vector<int> act(const env::JointObservation& obs) = 0;
};

/// Greedy (epsilon = 0) execution of an agent bank, keeping its own
/// observation stack.
template <typename T>
class GreedyPolicy final : public Policy {
 public:
  explicit GreedyPolicy(const marl::AgentBank<T>& bank) : bank_(bank), stack_(bank.layout()) {}

  void begin_episode(const env::JointObservation& first) override {
    stack_.reset(first);
    fresh_ = true;
  }

  std::vector<int> act(const env::JointObservation& obs) override {
    if (!fresh_) stack_.push(obs);
    fresh_ = false;
    return bank_.greedy(stack_.inputs<T>());
  }

 private:
  const marl::AgentBank<T>& bank_;
  marl::ObservationStack stack_;
  bool fresh_ = true;
};

struct EvalResult {
  double win_rate = 0.0;
  double mean_return = 0.0;
  int episodes = 0;
};

/// Runs `episodes` episodes of `policy` on a fresh environment driven by
/// `rng`. Nothing is learned.
inline EvalResult evaluate(const env::EnvSpec& spec, Policy& policy, int episodes, Rng rng) {
  if (episodes <= 0) throw UsageError("evaluation needs at least one episode");
  auto environment = env::make_environment(spec);
  EvalResult out;
  out.episodes = episodes;
  int wins = 0;
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    auto obs = environment->reset(rng);
    policy.begin_episode(obs);
    for (;;) {
      const auto actions = policy.act(obs);
      auto step = environment->step(actions);
      total += step.reward;
      if (step.terminal) {
        wins += step.win ? 1 : 0;
        break;
      }
      obs = std::move(step.next);
    }
  }
  out.win_rate = static_cast<double>(wins) / episodes;
  out.mean_return = total / episodes;
  return out;
}

inline marl::TeamLayout team_layout(const env::Environment& e, int stack_depth) {
  marl::TeamLayout layout;
  layout.agents = e.agent_count();
  layout.observation_size = e.observation_size();
  layout.stack_depth = stack_depth;
  layout.action_count = e.action_count();
  layout.state_size = e.state_size();
  return layout;
}

template <typename T>
struct RunResult {
  std::vector<MetricsRow> rows;
  std::unique_ptr<marl::Strategy<T>> strategy;
};

/// Builds the strategy a config describes, initialised from `root`.
template <typename T>
std::unique_ptr<marl::Strategy<T>> make_run_strategy(const RunConfig& config, const Rng& root) {
  auto probe = env::make_environment(config.env);
  const auto layout = team_layout(*probe, config.stack_depth);
  Rng init = root.child("init");
  return marl::make_strategy<T>(config.strategy, layout, probe->ground_truth_state().second,
                                config.strategy_settings(), init);
}

namespace detail {

struct BlockStats {
  double critic_loss = 0.0;
  double agent_loss = 0.0;
  double residual = 0.0;
  double essential = 0.0;
  double redundant = 0.0;
  long steps = 0;

  void add(const marl::StepReport& r, const env::EnvSpec& spec) {
    critic_loss += r.critic_loss;
    agent_loss += r.agent_loss;
    residual += r.mean_abs_residual;
    double e = 0.0;
    double d = 0.0;
    for (int i = 0; i < spec.agent_count(); ++i) {
      (spec.is_essential(i) ? e : d) += r.mean_abs_credit[static_cast<std::size_t>(i)];
    }
    essential += e / spec.n_essential;
    if (spec.n_redundant > 0) redundant += d / spec.n_redundant;
    ++steps;
  }

  double mean(double v) const { return steps == 0 ? 0.0 : v / static_cast<double>(steps); }
};

}  // namespace detail

/// One full training run: epsilon-greedy rollouts into a replay buffer, one
/// train step per environment step once the buffer holds `warmup`
/// transitions, and a greedy evaluation block every `eval_interval`
/// episodes. Fully determined by (config, root).
///
/// Streams: init (network weights), env (training resets), explore
/// (epsilon-greedy draws), replay (minibatch sampling) and eval/<block>
/// (evaluation resets). Evaluation never touches the training streams.
template <typename T>
RunResult<T> run(const RunConfig& config, const Rng& root) {
  config.validate();
  RunResult<T> result;
  result.strategy = make_run_strategy<T>(config, root);
  auto& strategy = *result.strategy;
  const auto& layout = strategy.agents().layout();
  const bool keep_state = strategy.needs_state();

  auto environment = env::make_environment(config.env);
  Rng env_rng = root.child("env");
  Rng explore_rng = root.child("explore");
  Rng replay_rng = root.child("replay");
  Rng eval_root = root.child("eval");

  marl::ReplayBuffer buffer(static_cast<std::size_t>(config.buffer_capacity));
  marl::ObservationStack stack(layout);
  const auto min_fill = static_cast<std::size_t>(std::max(config.warmup, config.batch_size));
  const auto start = std::chrono::steady_clock::now();

  detail::BlockStats block;
  long total_steps = 0;
  for (long episode = 0; episode < config.episodes; ++episode) {
    const double eps = marl::epsilon_at(config.epsilon, episode);
    auto obs = environment->reset(env_rng);
    stack.reset(obs);
    for (;;) {
      const auto inputs = stack.inputs<T>();
      const auto actions = marl::select_actions(strategy.agents(), inputs, eps, explore_rng);
      auto step = environment->step(actions);

      marl::Transition tr;
      tr.inputs = stack.flat();
      tr.actions = actions;
      tr.reward = step.reward;
      tr.terminal = step.terminal;
      if (keep_state) tr.state = marl::to_float(obs.state);
      if (!step.terminal) {
        stack.push(step.next);
        tr.next_inputs = stack.flat();
        if (keep_state) tr.next_state = marl::to_float(step.next.state);
      }
      buffer.push(std::move(tr));
      ++total_steps;

      if (buffer.size() >= min_fill) {
        const auto samples = buffer.sample(static_cast<std::size_t>(config.batch_size), replay_rng);
        const auto batch = marl::make_batch<T>(samples, layout, keep_state);
        try {
          block.add(strategy.train_step(batch), config.env);
        } catch (const TrainingError& e) {
          throw TrainingError("episode " + std::to_string(episode) + ", environment step " +
                                  std::to_string(total_steps) + ": " + e.what(),
                              e.layer());
        }
      }
      if (step.terminal) break;
      obs = std::move(step.next);
    }

    if ((episode + 1) % config.eval_interval == 0) {
      const long block_index = (episode + 1) / config.eval_interval;
      GreedyPolicy<T> policy(strategy.agents());
      const auto eval = evaluate(config.env, policy, config.eval_episodes,
                                 eval_root.child("block/" + std::to_string(block_index)));
      MetricsRow row;
      row.episode = episode + 1;
      row.win_rate = eval.win_rate;
      row.mean_return = eval.mean_return;
      row.critic_loss = block.mean(block.critic_loss);
      row.agent_loss = block.mean(block.agent_loss);
      row.conservation_residual = block.mean(block.residual);
      row.epsilon = eps;
      row.essential_mean_abs_rel = block.mean(block.essential);
      row.redundant_mean_abs_rel = block.mean(block.redundant);
      if (config.wall_clock) {
        row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      }
      result.rows.push_back(row);
      block = {};
    }
  }
  return result;
}

/// Scalar-width-erased run output.
struct RunOutput {
  std::vector<MetricsRow> rows;
  std::variant<std::shared_ptr<marl::Strategy<double>>, std::shared_ptr<marl::Strategy<float>>> strategy;

  double final_win_rate() const { return rows.empty() ? 0.0 : rows.back().win_rate; }
};

inline RunOutput run(const RunConfig& config, const Rng& root) {
  RunOutput out;
  if (config.scalar == ScalarWidth::f64) {
    auto r = run<double>(config, root);
    out.rows = std::move(r.rows);
    out.strategy = std::shared_ptr<marl::Strategy<double>>(std::move(r.strategy));
  } else {
    auto r = run<float>(config, root);
    out.rows = std::move(r.rows);
    out.strategy = std::shared_ptr<marl::Strategy<float>>(std::move(r.strategy));
  }
  return out;
}

inline RunOutput run(const RunConfig& config) { return run(config, Rng(config.seed)); }

// ---------------------------------------------------------------------------
// Redundancy sweep

/// Linear-interpolation quantile (q in [0, 1]) of unsorted values.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
}

struct SweepRunRecord {
  RunConfig config;
  std::vector<MetricsRow> rows;
  std::string error;
  std::chrono::system_clock::time_point started{};

  bool ok() const { return error.empty(); }
  double final_win_rate() const { return rows.empty() ? 0.0 : rows.back().win_rate; }
};

struct SweepCell {
  marl::StrategyKind strategy = marl::StrategyKind::rdn;
  int redundant = 0;
  std::vector<double> final_win_rates;  // successful runs, seed order
  int failures = 0;
  double median = 0.0;
  double iqr = 0.0;
};

struct SweepResult {
  std::vector<SweepRunRecord> runs;
  std::vector<SweepCell> cells;

  bool all_ok() const {
    return std::all_of(runs.begin(), runs.end(), [](const SweepRunRecord& r) { return r.ok(); });
  }

  const SweepCell* cell(marl::StrategyKind s, int redundant) const {
    for (const auto& c : cells) {
      if (c.strategy == s && c.redundant == redundant) return &c;
    }
    return nullptr;
  }
};

/// The isolated stream of one sweep run, keyed by (strategy, count, seed).
inline Rng sweep_stream(marl::StrategyKind s, int redundant, std::uint64_t seed) {
  return Rng(seed).child(marl::to_string(s) + "/" + std::to_string(redundant));
}

/// Called once per finished run, possibly from a worker thread.
using RunSink = std::function<void(const SweepRunRecord&, const RunOutput*)>;

/// Cross product of strategies x redundant counts x seeds. Each run gets its
/// own stream, so results do not depend on `jobs` or on completion order.
/// A failing run is recorded in its cell and the sweep carries on.
inline SweepResult sweep(const RunConfig& base, const std::vector<int>& redundant_counts,
                         const std::vector<std::uint64_t>& seeds, const std::vector<marl::StrategyKind>& strategies,
                         int jobs = 1, const RunSink& sink = {}) {
  for (int c : redundant_counts) {
    if (c < 0) throw ConfigError("redundant counts must be >= 0");
  }
  if (seeds.empty() || redundant_counts.empty() || strategies.empty()) {
    throw ConfigError("sweep needs at least one strategy, redundant count and seed");
  }
  SweepResult result;
  for (auto s : strategies) {
    for (int count : redundant_counts) {
      for (auto seed : seeds) {
        SweepRunRecord rec;
        rec.config = base;
        rec.config.strategy = s;
        rec.config.env.n_redundant = count;
        rec.config.seed = seed;
        result.runs.push_back(std::move(rec));
      }
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < result.runs.size(); i = next.fetch_add(1)) {
      auto& rec = result.runs[i];
      rec.started = std::chrono::system_clock::now();
      try {
        const auto out = run(rec.config, sweep_stream(rec.config.strategy, rec.config.env.n_redundant, rec.config.seed));
        rec.rows = out.rows;
        if (sink) sink(rec, &out);
      } catch (const std::exception& e) {
        rec.error = e.what();
        if (sink) sink(rec, nullptr);
      }
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(result.runs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (auto s : strategies) {
    for (int count : redundant_counts) {
      SweepCell cell;
      cell.strategy = s;
      cell.redundant = count;
      for (const auto& rec : result.runs) {
        if (rec.config.strategy != s || rec.config.env.n_redundant != count) continue;
        if (rec.ok()) {
          cell.final_win_rates.push_back(rec.final_win_rate());
        } else {
          ++cell.failures;
        }
      }
      cell.median = quantile(cell.final_win_rates, 0.5);
      cell.iqr = quantile(cell.final_win_rates, 0.75) - quantile(cell.final_win_rates, 0.25);
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

}  // namespace rdn::train
