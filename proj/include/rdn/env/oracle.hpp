#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rdn/env/envs.hpp"

namespace rdn::env {

/// Optimal joint behaviour from one starting situation.
struct PolicyEntry {
  std::string situation;
  std::vector<std::vector<int>> joint_actions;  // one joint action per step
  double value = 0.0;
};

struct OracleResult {
  double optimal_value = 0.0;  // expectation over the reset distribution
  std::vector<PolicyEntry> policy;
  int sweeps = 0;
};

inline constexpr double kLeverEnumerationLimit = 1e6;
inline constexpr double kCorridorStateActionLimit = 1e7;
inline constexpr std::size_t kPolicyTableLimit = 64;

namespace detail {

/// Decodes `code` into m base-`radix` digits, agent 0 least significant.
inline void decode_joint(std::uint64_t code, int radix, std::vector<int>& out) {
  for (auto& a : out) {
    a = static_cast<int>(code % static_cast<std::uint64_t>(radix));
    code /= static_cast<std::uint64_t>(radix);
  }
}

inline OracleResult lever_oracle(const EnvSpec& spec) {
  const int m = spec.agent_count();
  const double joint = std::pow(static_cast<double>(spec.levers), m);
  if (joint > kLeverEnumerationLimit) {
    throw CapacityError("lever oracle: " + std::to_string(spec.levers) + "^" + std::to_string(m) +
                        " joint actions exceed the enumeration limit");
  }
  const auto count = static_cast<std::uint64_t>(std::llround(joint));
  OracleResult out;
  std::vector<int> actions(static_cast<std::size_t>(m));
  for (int target = 0; target < spec.levers; ++target) {
    double best = -1.0;
    std::vector<int> best_actions;
    for (std::uint64_t code = 0; code < count; ++code) {
      decode_joint(code, spec.levers, actions);
      const double r = SignalLevers::reward(spec, target, actions);
      if (r > best) {
        best = r;
        best_actions = actions;
      }
    }
    out.optimal_value += best / spec.levers;
    if (out.policy.size() < kPolicyTableLimit) {
      out.policy.push_back(PolicyEntry{"target=" + std::to_string(target), {best_actions}, best});
    }
  }
  out.sweeps = 1;
  return out;
}

class CorridorIndexer {
 public:
  explicit CorridorIndexer(const EnvSpec& spec) : spec_(spec), cells_(2 * spec.corridor_length) {
    count_ = static_cast<std::uint64_t>(spec.corridor_length);
    for (int i = 0; i < spec.agent_count(); ++i) count_ *= static_cast<std::uint64_t>(cells_);
  }

  std::uint64_t count() const { return count_; }

  std::uint64_t encode(const CorridorState& s) const {
    std::uint64_t code = 0;
    for (std::size_t i = s.agents.size(); i-- > 0;) {
      const auto& c = s.agents[i];
      code = code * static_cast<std::uint64_t>(cells_) + static_cast<std::uint64_t>(c.row * spec_.corridor_length + c.col);
    }
    return code * static_cast<std::uint64_t>(spec_.corridor_length) + static_cast<std::uint64_t>(s.payload);
  }

  CorridorState decode(std::uint64_t code) const {
    CorridorState s;
    s.payload = static_cast<int>(code % static_cast<std::uint64_t>(spec_.corridor_length));
    code /= static_cast<std::uint64_t>(spec_.corridor_length);
    s.agents.resize(static_cast<std::size_t>(spec_.agent_count()));
    for (auto& c : s.agents) {
      const int cell = static_cast<int>(code % static_cast<std::uint64_t>(cells_));
      code /= static_cast<std::uint64_t>(cells_);
      c.row = cell / spec_.corridor_length;
      c.col = cell % spec_.corridor_length;
    }
    return s;
  }

 private:
  EnvSpec spec_;
  int cells_;
  std::uint64_t count_ = 1;
};

inline std::string describe(const CorridorState& s) {
  std::string out = "payload=" + std::to_string(s.payload) + " agents=";
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    if (i) out += ';';
    out += "(" + std::to_string(s.agents[i].row) + "," + std::to_string(s.agents[i].col) + ")";
  }
  return out;
}

/// Finite-horizon value iteration over the joint state space, undiscounted.
/// values[h][s] is the optimal return from s with h steps left; iteration
/// stops after T sweeps or once a sweep changes no value by more than 1e-10.
inline OracleResult corridor_oracle(const EnvSpec& spec) {
  const int m = spec.agent_count();
  const CorridorIndexer index(spec);
  const double joint_actions = std::pow(static_cast<double>(kCorridorActions), m);
  if (static_cast<double>(index.count()) * joint_actions > kCorridorStateActionLimit) {
    throw CapacityError("corridor oracle: joint state-action space exceeds " +
                        std::to_string(static_cast<long long>(kCorridorStateActionLimit)));
  }
  const auto n_states = index.count();
  const auto n_actions = static_cast<std::uint64_t>(std::llround(joint_actions));

  // Deterministic dynamics: precompute successor and reward per (s, a).
  std::vector<std::uint64_t> successor(n_states * n_actions);
  std::vector<double> reward(n_states * n_actions);
  std::vector<char> win(n_states * n_actions);
  std::vector<char> terminal_state(n_states);
  std::vector<int> actions(static_cast<std::size_t>(m));
  for (std::uint64_t s = 0; s < n_states; ++s) {
    const CorridorState state = index.decode(s);
    terminal_state[s] = state.payload == spec.corridor_length - 1;
    if (terminal_state[s]) continue;
    for (std::uint64_t a = 0; a < n_actions; ++a) {
      decode_joint(a, kCorridorActions, actions);
      const auto o = corridor_transition(spec, state, actions);
      successor[s * n_actions + a] = index.encode(o.next);
      reward[s * n_actions + a] = o.reward;
      win[s * n_actions + a] = o.win;
    }
  }

  std::vector<std::vector<double>> values{std::vector<double>(n_states, 0.0)};
  int sweeps = 0;
  for (int h = 1; h <= spec.horizon; ++h) {
    const auto& prev = values.back();
    std::vector<double> next(n_states, 0.0);
    double delta = 0.0;
    for (std::uint64_t s = 0; s < n_states; ++s) {
      if (terminal_state[s]) continue;
      double best = -1e300;
      for (std::uint64_t a = 0; a < n_actions; ++a) {
        const auto k = s * n_actions + a;
        const double q = reward[k] + (win[k] ? 0.0 : prev[successor[k]]);
        best = std::max(best, q);
      }
      next[s] = best;
      delta = std::max(delta, std::abs(best - prev[s]));
    }
    values.push_back(std::move(next));
    sweeps = h;
    if (delta <= 1e-10) break;
  }
  // Once converged, every longer horizon has the same values.
  auto value_at = [&](int steps_left, std::uint64_t s) {
    return values[static_cast<std::size_t>(std::min<int>(steps_left, static_cast<int>(values.size()) - 1))][s];
  };

  // Reset distribution: essentials at (0,0), each redundant agent uniform on row 0, cols 1..L-1.
  const int n_r = spec.n_redundant;
  const int spots = spec.corridor_length - 1;
  std::uint64_t starts = 1;
  for (int i = 0; i < n_r; ++i) starts *= static_cast<std::uint64_t>(spots);

  OracleResult out;
  out.sweeps = sweeps;
  for (std::uint64_t code = 0; code < starts; ++code) {
    CorridorState s0;
    s0.payload = 0;
    s0.agents.resize(static_cast<std::size_t>(m));
    std::uint64_t c = code;
    for (int i = spec.n_essential; i < m; ++i) {
      s0.agents[static_cast<std::size_t>(i)] = CorridorCell{0, 1 + static_cast<int>(c % static_cast<std::uint64_t>(spots))};
      c /= static_cast<std::uint64_t>(spots);
    }
    const auto s0_code = index.encode(s0);
    const double v = value_at(spec.horizon, s0_code);
    out.optimal_value += v / static_cast<double>(starts);

    if (out.policy.size() >= kPolicyTableLimit) continue;
    PolicyEntry entry{describe(s0), {}, v};
    std::uint64_t s = s0_code;
    for (int left = spec.horizon; left > 0 && !terminal_state[s]; --left) {
      std::uint64_t best_a = 0;
      double best = -1e300;
      for (std::uint64_t a = 0; a < n_actions; ++a) {
        const auto k = s * n_actions + a;
        const double q = reward[k] + (win[k] ? 0.0 : value_at(left - 1, successor[k]));
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      decode_joint(best_a, kCorridorActions, actions);
      entry.joint_actions.push_back(actions);
      s = successor[s * n_actions + best_a];
    }
    out.policy.push_back(std::move(entry));
  }
  return out;
}

}  // namespace detail

/// Exact optimum for small instances: exhaustive enumeration for the lever
/// game, value iteration for the corridor.
inline OracleResult enumerate_oracle(const EnvSpec& spec) {
  spec.validate();
  return spec.kind == EnvKind::signal_levers ? detail::lever_oracle(spec) : detail::corridor_oracle(spec);
}

}  // namespace rdn::env
