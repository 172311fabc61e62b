#pragma once

#include "rdn/env/environment.hpp"

namespace rdn::env {

/// One-shot coordination game. A target lever is drawn and shown to every
/// agent; the team scores 1 only if every essential agent pulls the target
/// and no redundant agent does.
///
/// Observation: [role bit (1 = essential), one-hot(target) K, one-hot(id) m]
/// State:       [one-hot(target) K (unowned), role bit per agent (owned)]
class SignalLevers final : public Environment {
 public:
  explicit SignalLevers(EnvSpec spec) : Environment(spec) {}

  int action_count() const override { return spec_.levers; }
  int observation_size() const override { return 1 + spec_.levers + agent_count(); }
  int state_size() const override { return spec_.levers + agent_count(); }

  int target() const { return target_; }

  JointObservation reset(Rng& rng) override {
    target_ = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec_.levers)));
    steps_ = 0;
    done_ = false;
    return assemble();
  }

  /// Places the environment at a specific target (oracles, tests).
  JointObservation reset_to(int target) {
    if (target < 0 || target >= spec_.levers) throw UsageError("target lever out of range");
    target_ = target;
    steps_ = 0;
    done_ = false;
    return assemble();
  }

  StepResult step(std::span<const int> joint_action) override {
    check_actions(joint_action);
    if (done_) throw UsageError("step() on a finished episode; call reset()");
    const double r = reward(spec_, target_, joint_action);
    ++steps_;
    done_ = true;
    StepResult out;
    out.next = assemble();
    out.reward = r;
    out.terminal = true;
    out.win = r == 1.0;
    return out;
  }

  JointObservation observe() const override { return assemble(); }

  std::pair<std::vector<double>, std::vector<int>> ground_truth_state() const override {
    std::vector<double> state;
    std::vector<int> owner;
    detail::one_hot(state, target_, spec_.levers);
    owner.assign(static_cast<std::size_t>(spec_.levers), -1);
    for (int i = 0; i < agent_count(); ++i) {
      state.push_back(spec_.is_essential(i) ? 1.0 : 0.0);
      owner.push_back(i);
    }
    return {std::move(state), std::move(owner)};
  }

  static double reward(const EnvSpec& spec, int target, std::span<const int> joint_action) {
    for (int i = 0; i < spec.agent_count(); ++i) {
      const bool on_target = joint_action[static_cast<std::size_t>(i)] == target;
      if (spec.is_essential(i) != on_target) return 0.0;
    }
    return 1.0;
  }

 protected:
  std::vector<double> local_observation(int agent) const override {
    std::vector<double> o;
    o.reserve(static_cast<std::size_t>(observation_size()));
    o.push_back(spec_.is_essential(agent) ? 1.0 : 0.0);
    detail::one_hot(o, target_, spec_.levers);
    detail::one_hot(o, agent, agent_count());
    return o;
  }

 private:
  int target_ = 0;
  bool done_ = false;
};

}  // namespace rdn::env
