#pragma once

#include <span>
#include <string>
#include <vector>

#include "rdn/errors.hpp"
#include "rdn/lrp/slice_map.hpp"
#include "rdn/marl/replay.hpp"
#include "rdn/tensor_net/mlp.hpp"

namespace rdn::marl {

enum class CriticInput { local_concat, full_state };

inline std::string to_string(CriticInput m) { return m == CriticInput::local_concat ? "local_concat" : "full_state"; }

inline CriticInput parse_critic_input(const std::string& s) {
  if (s == "local_concat") return CriticInput::local_concat;
  if (s == "full_state") return CriticInput::full_state;
  throw ConfigError("unknown critic input mode '" + s + "' (expected local_concat or full_state)");
}

/// Joint critic and its target copy.
///
/// Input layout:
///   local_concat  [o_1; onehot(a_1); o_2; onehot(a_2); ...]
///   full_state    [state; onehot(a_1); ...; onehot(a_m)]
/// where o_i is agent i's newest observation frame.
template <typename T>
class CriticPair {
 public:
  CriticPair(const TeamLayout& layout, CriticInput mode, std::vector<int> state_owner, const std::vector<int>& hidden,
             int sync_interval, Rng& rng)
      : layout_(layout), mode_(mode), sync_interval_(sync_interval) {
    if (sync_interval < 1) throw ConfigError("strategy.target_sync must be >= 1");
    if (mode == CriticInput::full_state && static_cast<int>(state_owner.size()) != layout.state_size) {
      throw ConfigError("state ownership map does not match the state size");
    }
    build_slices(state_owner);
    std::vector<int> sizes{input_size()};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);
    Rng stream = rng.child("critic");
    online_ = Mlp<T>::make(sizes, stream);
    target_ = online_;
  }

  CriticInput mode() const { return mode_; }
  const TeamLayout& layout() const { return layout_; }
  int sync_interval() const { return sync_interval_; }
  long updates() const { return updates_; }

  int input_size() const {
    const int actions = layout_.agents * layout_.action_count;
    return mode_ == CriticInput::local_concat ? layout_.agents * layout_.observation_size + actions
                                              : layout_.state_size + actions;
  }

  const lrp::SliceMap& slices() const { return slices_; }

  Mlp<T>& online() { return online_; }
  const Mlp<T>& online() const { return online_; }
  const Mlp<T>& target() const { return target_; }

  void sync() { copy_parameters(online_, target_); }

  /// Counts one gradient step on the online critic; syncs the target every
  /// `sync_interval` steps. Returns true when a sync happened.
  bool note_update() {
    ++updates_;
    if (updates_ % sync_interval_ == 0) {
      sync();
      return true;
    }
    return false;
  }

  /// Batched encoding. `agent_inputs` are the (possibly stacked) agent
  /// inputs; only the newest frame enters the critic.
  Matrix<T> encode(const std::vector<Matrix<T>>& agent_inputs, const Matrix<T>& state,
                   const std::vector<std::vector<int>>& actions) const {
    if (static_cast<int>(agent_inputs.size()) != layout_.agents || static_cast<int>(actions.size()) != layout_.agents) {
      throw ConfigError("critic input arity mismatch: expected " + std::to_string(layout_.agents) + " agents");
    }
    const Eigen::Index n = agent_inputs.front().cols();
    Matrix<T> x = Matrix<T>::Zero(input_size(), n);
    const int obs = layout_.observation_size;
    const int newest = (layout_.stack_depth - 1) * obs;
    const int acts = layout_.action_count;
    if (mode_ == CriticInput::full_state) {
      if (state.rows() != layout_.state_size || state.cols() != n) throw ConfigError("critic state input has wrong shape");
      x.topRows(layout_.state_size) = state;
    }
    for (int i = 0; i < layout_.agents; ++i) {
      const auto& in = agent_inputs[static_cast<std::size_t>(i)];
      if (in.rows() != layout_.input_size() || in.cols() != n) throw ConfigError("critic agent input has wrong shape");
      const int base = action_offset(i) - (mode_ == CriticInput::local_concat ? obs : 0);
      if (mode_ == CriticInput::local_concat) x.middleRows(base, obs) = in.middleRows(newest, obs);
      const auto& a = actions[static_cast<std::size_t>(i)];
      for (Eigen::Index c = 0; c < n; ++c) {
        const int act = a[static_cast<std::size_t>(c)];
        if (act < 0 || act >= acts) throw ConfigError("critic action index out of range");
        x(action_offset(i) + act, c) = T(1);
      }
    }
    return x;
  }

  /// Single joint sample: Q_tot and the cache needed for relevance.
  std::pair<T, ActivationCache<T>> critic_forward(const std::vector<Vector<T>>& agent_inputs, const Vector<T>& state,
                                                  std::span<const int> joint_action, bool use_target) const {
    if (static_cast<int>(agent_inputs.size()) != layout_.agents || static_cast<int>(joint_action.size()) != layout_.agents) {
      throw ConfigError("critic_forward: expected " + std::to_string(layout_.agents) + " agents");
    }
    std::vector<Matrix<T>> inputs;
    std::vector<std::vector<int>> actions;
    for (int i = 0; i < layout_.agents; ++i) {
      inputs.emplace_back(agent_inputs[static_cast<std::size_t>(i)]);
      actions.push_back({joint_action[static_cast<std::size_t>(i)]});
    }
    const Matrix<T> s = mode_ == CriticInput::full_state ? Matrix<T>(state) : Matrix<T>();
    auto cache = forward(use_target ? target_ : online_, encode(inputs, s, actions));
    const T q = cache.output()(0, 0);
    return {q, std::move(cache)};
  }

 private:
  int action_offset(int agent) const {
    const int acts = layout_.action_count;
    if (mode_ == CriticInput::local_concat) return agent * (layout_.observation_size + acts) + layout_.observation_size;
    return layout_.state_size + agent * acts;
  }

  void build_slices(const std::vector<int>& state_owner) {
    slices_ = lrp::SliceMap(static_cast<std::size_t>(input_size()), layout_.agents);
    for (int i = 0; i < layout_.agents; ++i) {
      if (mode_ == CriticInput::local_concat) {
        slices_.assign_range(static_cast<std::size_t>(action_offset(i) - layout_.observation_size),
                             static_cast<std::size_t>(layout_.observation_size), i);
      }
      slices_.assign_range(static_cast<std::size_t>(action_offset(i)), static_cast<std::size_t>(layout_.action_count), i);
    }
    if (mode_ == CriticInput::full_state) {
      for (std::size_t k = 0; k < state_owner.size(); ++k) slices_.assign(k, state_owner[k]);
    }
  }

  TeamLayout layout_;
  CriticInput mode_;
  int sync_interval_;
  long updates_ = 0;
  lrp::SliceMap slices_;
  Mlp<T> online_;
  Mlp<T> target_;
};

}  // namespace rdn::marl
