#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rdn/errors.hpp"
#include "rdn/tensor_net/rng.hpp"

namespace rdn::env {

enum class EnvKind { signal_levers, piano_corridor };

inline std::string to_string(EnvKind k) { return k == EnvKind::signal_levers ? "signal_levers" : "piano_corridor"; }

inline EnvKind parse_env_kind(const std::string& s) {
  if (s == "signal_levers") return EnvKind::signal_levers;
  if (s == "piano_corridor") return EnvKind::piano_corridor;
  throw ConfigError("unknown environment kind '" + s + "' (expected signal_levers or piano_corridor)");
}

/// Environment parameters. Agents 0..n_essential-1 are essential, the rest
/// redundant.
struct EnvSpec {
  EnvKind kind = EnvKind::signal_levers;
  int n_essential = 4;
  int n_redundant = 0;
  int levers = 2;           // signal_levers
  int corridor_length = 4;  // piano_corridor
  int horizon = 20;         // piano_corridor

  int agent_count() const { return n_essential + n_redundant; }
  bool is_essential(int agent) const { return agent < n_essential; }

  void validate() const {
    if (n_essential < 1) throw ConfigError("env.n_essential must be >= 1");
    if (n_redundant < 0) throw ConfigError("env.n_redundant must be >= 0");
    if (levers < 2) throw ConfigError("env.levers must be >= 2");
    if (corridor_length < 2) throw ConfigError("env.corridor_length must be >= 2");
    if (horizon < 1) throw ConfigError("env.horizon must be >= 1");
  }

  bool operator==(const EnvSpec&) const = default;
};

/// Per-agent local observations plus the ground-truth state and its
/// ownership (-1 = unowned).
struct JointObservation {
  std::vector<std::vector<double>> local;
  std::vector<double> state;
  std::vector<int> state_owner;
};

struct StepResult {
  JointObservation next;
  double reward = 0.0;
  bool terminal = false;
  bool win = false;
};

class Environment {
 public:
  explicit Environment(EnvSpec spec) : spec_(spec) { spec_.validate(); }
  virtual ~Environment() = default;

  const EnvSpec& spec() const { return spec_; }
  int agent_count() const { return spec_.agent_count(); }

  virtual int action_count() const = 0;
  virtual int observation_size() const = 0;
  virtual int state_size() const = 0;

  virtual JointObservation reset(Rng& rng) = 0;
  virtual StepResult step(std::span<const int> joint_action) = 0;
  virtual JointObservation observe() const = 0;

  /// Ground-truth state vector and the owner of each index.
  virtual std::pair<std::vector<double>, std::vector<int>> ground_truth_state() const = 0;

  int elapsed_steps() const { return steps_; }

 protected:
  void check_actions(std::span<const int> joint_action) const {
    if (static_cast<int>(joint_action.size()) != agent_count()) {
      throw UsageError("expected " + std::to_string(agent_count()) + " actions, got " +
                       std::to_string(joint_action.size()));
    }
    for (std::size_t i = 0; i < joint_action.size(); ++i) {
      if (joint_action[i] < 0 || joint_action[i] >= action_count()) {
        throw UsageError("agent " + std::to_string(i) + ": action index " + std::to_string(joint_action[i]) +
                         " out of range");
      }
    }
  }

  JointObservation assemble() const {
    JointObservation obs;
    obs.local.reserve(static_cast<std::size_t>(agent_count()));
    for (int i = 0; i < agent_count(); ++i) obs.local.push_back(local_observation(i));
    auto [state, owner] = ground_truth_state();
    obs.state = std::move(state);
    obs.state_owner = std::move(owner);
    return obs;
  }

  virtual std::vector<double> local_observation(int agent) const = 0;

  EnvSpec spec_;
  int steps_ = 0;
};

namespace detail {
inline void one_hot(std::vector<double>& out, int index, int size) {
  for (int k = 0; k < size; ++k) out.push_back(k == index ? 1.0 : 0.0);
}
}  // namespace detail

}  // namespace rdn::env
