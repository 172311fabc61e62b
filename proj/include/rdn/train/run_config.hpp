#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rdn/env/environment.hpp"
#include "rdn/errors.hpp"
#include "rdn/lrp/rule.hpp"
#include "rdn/marl/agents.hpp"
#include "rdn/marl/strategy.hpp"

namespace rdn::train {

enum class ScalarWidth { f64, f32 };

inline std::string to_string(ScalarWidth w) { return w == ScalarWidth::f64 ? "f64" : "f32"; }

inline ScalarWidth parse_scalar_width(const std::string& s) {
  if (s == "f64") return ScalarWidth::f64;
  if (s == "f32") return ScalarWidth::f32;
  throw ConfigError("unknown scalar width '" + s + "' (expected f64 or f32)");
}

/// Everything one training run depends on.
struct RunConfig {
  env::EnvSpec env{};
  marl::StrategyKind strategy = marl::StrategyKind::rdn;
  marl::CriticInput critic_input = marl::CriticInput::local_concat;
  bool decompose_target = false;
  int target_sync = 200;
  int stack_depth = 1;
  std::vector<int> agent_hidden{64};
  std::vector<int> critic_hidden{64, 64};

  lrp::LrpRule lrp{lrp::RuleKind::alphabeta, 1e-6, 1.0, 0.0};

  double gamma = 0.99;
  marl::EpsilonSchedule epsilon{};
  OptimizerKind optimizer = OptimizerKind::adam;
  double agent_lr = 5e-4;
  double critic_lr = 5e-4;
  int batch_size = 32;
  int buffer_capacity = 50000;
  int warmup = 1000;
  int episodes = 20000;
  int eval_interval = 100;
  int eval_episodes = 100;
  std::uint64_t seed = 1;
  ScalarWidth scalar = ScalarWidth::f64;

  bool snapshots = true;
  bool wall_clock = false;

  bool operator==(const RunConfig&) const = default;

  void validate() const {
    env.validate();
    lrp.validate();
    epsilon.validate();
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("training.gamma must lie in [0, 1)");
    if (target_sync < 1) throw ConfigError("strategy.target_sync must be >= 1");
    if (stack_depth < 1) throw ConfigError("strategy.stack_depth must be >= 1");
    for (int h : agent_hidden) {
      if (h < 1) throw ConfigError("strategy.agent_hidden entries must be >= 1");
    }
    for (int h : critic_hidden) {
      if (h < 1) throw ConfigError("strategy.critic_hidden entries must be >= 1");
    }
    if (!(agent_lr > 0.0)) throw ConfigError("training.agent_lr must be > 0");
    if (!(critic_lr > 0.0)) throw ConfigError("training.critic_lr must be > 0");
    if (batch_size < 1) throw ConfigError("training.batch_size must be >= 1");
    if (buffer_capacity < batch_size) throw ConfigError("training.buffer_capacity must be >= training.batch_size");
    if (warmup < 0) throw ConfigError("training.warmup must be >= 0");
    if (episodes < 1) throw ConfigError("training.episodes must be >= 1");
    if (eval_interval < 1 || eval_interval > episodes) {
      throw ConfigError("training.eval_interval must lie in [1, training.episodes]");
    }
    if (eval_episodes < 1) throw ConfigError("training.eval_episodes must be >= 1");
  }

  marl::StrategySettings strategy_settings() const {
    marl::StrategySettings s;
    s.gamma = gamma;
    s.target_sync = target_sync;
    s.agent_optimizer = OptimizerSettings{optimizer, agent_lr};
    s.critic_optimizer = OptimizerSettings{optimizer, critic_lr};
    s.rule = lrp;
    s.decompose_target = decompose_target;
    s.critic_input = critic_input;
    s.agent_hidden = agent_hidden;
    s.critic_hidden = critic_hidden;
    return s;
  }

  /// "<strategy>_r<n_redundant>_s<seed>"
  std::string run_id() const {
    return marl::to_string(strategy) + "_r" + std::to_string(env.n_redundant) + "_s" + std::to_string(seed);
  }
};

/// One evaluation block.
struct MetricsRow {
  long episode = 0;
  double win_rate = 0.0;
  double mean_return = 0.0;
  double critic_loss = 0.0;
  double agent_loss = 0.0;
  double conservation_residual = 0.0;
  double epsilon = 0.0;
  double essential_mean_abs_rel = 0.0;
  double redundant_mean_abs_rel = 0.0;
  double wall_ms = 0.0;

  bool operator==(const MetricsRow&) const = default;
};

}  // namespace rdn::train
