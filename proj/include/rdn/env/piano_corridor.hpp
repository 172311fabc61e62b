#pragma once

#include <algorithm>
#include <array>

#include "rdn/env/environment.hpp"

namespace rdn::env {

enum CorridorAction : int { kLeft = 0, kRight = 1, kUp = 2, kDown = 3, kStay = 4, kPush = 5 };
inline constexpr int kCorridorActions = 6;

struct CorridorCell {
  int row = 0;
  int col = 0;
  bool operator==(const CorridorCell&) const = default;
};

struct CorridorState {
  int payload = 0;
  std::vector<CorridorCell> agents;
  bool operator==(const CorridorState&) const = default;
};

struct CorridorOutcome {
  CorridorState next;
  double reward = 0.0;
  bool win = false;
};

/// One step of the corridor dynamics, without the horizon.
///
/// Movement resolves simultaneously and is clamped to the 2 x L grid;
/// agents may share a cell. The payload then advances one column if every
/// essential agent stands on (0, payload) and chose PUSH and no agent
/// occupies (0, payload + 1). Pushing agents move with the payload.
inline CorridorOutcome corridor_transition(const EnvSpec& spec, const CorridorState& s,
                                           std::span<const int> joint_action) {
  const int length = spec.corridor_length;
  CorridorOutcome out;
  out.next = s;
  auto& agents = out.next.agents;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    auto& cell = agents[i];
    switch (joint_action[i]) {
      case kLeft: cell.col = std::max(0, cell.col - 1); break;
      case kRight: cell.col = std::min(length - 1, cell.col + 1); break;
      case kUp: cell.row = 0; break;
      case kDown: cell.row = 1; break;
      default: break;
    }
  }
  bool push = true;
  for (int i = 0; i < spec.n_essential; ++i) {
    const auto& cell = agents[static_cast<std::size_t>(i)];
    if (joint_action[static_cast<std::size_t>(i)] != kPush || cell.row != 0 || cell.col != s.payload) {
      push = false;
      break;
    }
  }
  if (push) {
    const CorridorCell ahead{0, s.payload + 1};
    push = std::none_of(agents.begin(), agents.end(), [&](const CorridorCell& c) { return c == ahead; });
  }
  double reward = -0.01;
  if (push) {
    out.next.payload = s.payload + 1;
    for (int i = 0; i < spec.n_essential; ++i) agents[static_cast<std::size_t>(i)].col = out.next.payload;
    reward += 0.1;
  }
  out.win = out.next.payload == length - 1;
  if (out.win) reward += 1.0;
  out.reward = reward;
  return out;
}

/// Two-row corridor: essential agents must push a payload from column 0 to
/// column L-1 together while redundant agents, which start in the payload's
/// path, have to step into row 1.
///
/// Observation: [role bit, own row bit, one-hot(own col) L, one-hot(payload col) L,
///               blocked-ahead bit, one-hot(id) m]
/// blocked-ahead is set when some agent occupies (0, payload + 1).
/// State: [one-hot(payload col) L (unowned), per agent row bit + one-hot(col) (owned),
///         role bit per agent (owned)]
class PianoCorridor final : public Environment {
 public:
  explicit PianoCorridor(EnvSpec spec) : Environment(spec) {
    state_.agents.resize(static_cast<std::size_t>(agent_count()));
    for (int i = spec_.n_essential; i < agent_count(); ++i) {
      state_.agents[static_cast<std::size_t>(i)] = CorridorCell{0, std::min(1, spec_.corridor_length - 1)};
    }
  }

  int action_count() const override { return kCorridorActions; }
  int observation_size() const override { return 3 + 2 * spec_.corridor_length + agent_count(); }
  int state_size() const override { return spec_.corridor_length + agent_count() * (2 + spec_.corridor_length); }

  const CorridorState& state() const { return state_; }

  JointObservation reset(Rng& rng) override {
    CorridorState s;
    s.payload = 0;
    s.agents.resize(static_cast<std::size_t>(agent_count()));
    for (int i = spec_.n_essential; i < agent_count(); ++i) {
      const auto col = 1 + rng.uniform_int(static_cast<std::uint64_t>(spec_.corridor_length - 1));
      s.agents[static_cast<std::size_t>(i)] = CorridorCell{0, static_cast<int>(col)};
    }
    return reset_to(std::move(s));
  }

  JointObservation reset_to(CorridorState s) {
    if (static_cast<int>(s.agents.size()) != agent_count()) throw UsageError("corridor state has wrong agent count");
    state_ = std::move(s);
    steps_ = 0;
    done_ = false;
    return assemble();
  }

  StepResult step(std::span<const int> joint_action) override {
    check_actions(joint_action);
    if (done_) throw UsageError("step() on a finished episode; call reset()");
    auto outcome = corridor_transition(spec_, state_, joint_action);
    state_ = std::move(outcome.next);
    ++steps_;
    done_ = outcome.win || steps_ >= spec_.horizon;
    StepResult out;
    out.next = assemble();
    out.reward = outcome.reward;
    out.win = outcome.win;
    out.terminal = done_;
    return out;
  }

  JointObservation observe() const override { return assemble(); }

  std::pair<std::vector<double>, std::vector<int>> ground_truth_state() const override {
    const int length = spec_.corridor_length;
    std::vector<double> state;
    std::vector<int> owner;
    state.reserve(static_cast<std::size_t>(state_size()));
    detail::one_hot(state, state_.payload, length);
    owner.assign(static_cast<std::size_t>(length), -1);
    for (int i = 0; i < agent_count(); ++i) {
      const auto& cell = state_.agents[static_cast<std::size_t>(i)];
      state.push_back(cell.row == 1 ? 1.0 : 0.0);
      detail::one_hot(state, cell.col, length);
      owner.insert(owner.end(), static_cast<std::size_t>(1 + length), i);
    }
    for (int i = 0; i < agent_count(); ++i) {
      state.push_back(spec_.is_essential(i) ? 1.0 : 0.0);
      owner.push_back(i);
    }
    return {std::move(state), std::move(owner)};
  }

  bool blocked_ahead() const {
    const CorridorCell ahead{0, state_.payload + 1};
    return std::any_of(state_.agents.begin(), state_.agents.end(), [&](const CorridorCell& c) { return c == ahead; });
  }

 protected:
  std::vector<double> local_observation(int agent) const override {
    const int length = spec_.corridor_length;
    const auto& cell = state_.agents[static_cast<std::size_t>(agent)];
    std::vector<double> o;
    o.reserve(static_cast<std::size_t>(observation_size()));
    o.push_back(spec_.is_essential(agent) ? 1.0 : 0.0);
    o.push_back(cell.row == 1 ? 1.0 : 0.0);
    detail::one_hot(o, cell.col, length);
    detail::one_hot(o, state_.payload, length);
    o.push_back(blocked_ahead() ? 1.0 : 0.0);
    detail::one_hot(o, agent, agent_count());
    return o;
  }

 private:
  CorridorState state_;
  bool done_ = false;
};

}  // namespace rdn::env
