#pragma once

#include <string>
#include <vector>

#include "rdn/errors.hpp"
#include "rdn/marl/replay.hpp"
#include "rdn/tensor_net/mlp.hpp"
#include "rdn/tensor_net/rng.hpp"

namespace rdn::marl {

/// Linear epsilon decay from `start` to `end` over `decay_episodes`, then flat.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  int decay_episodes = 1000;

  void validate() const {
    if (!(0.0 <= end && end <= start && start <= 1.0)) {
      throw ConfigError("training.eps_start / training.eps_end: need 0 <= eps_end <= eps_start <= 1");
    }
    if (decay_episodes < 0) throw ConfigError("training.eps_decay_episodes must be >= 0");
  }

  bool operator==(const EpsilonSchedule&) const = default;
};

inline double epsilon_at(const EpsilonSchedule& s, long episode) {
  if (episode < 0) throw UsageError("epsilon_at: negative episode");
  if (s.decay_episodes == 0 || episode >= s.decay_episodes) return s.end;
  const double frac = static_cast<double>(episode) / static_cast<double>(s.decay_episodes);
  return s.start + (s.end - s.start) * frac;
}

/// One Q-network per agent (plus optional target copies). Each agent's
/// network is initialised from its own child stream, so agent i starts
/// identically whatever strategy owns the bank.
template <typename T>
class AgentBank {
 public:
  AgentBank(const TeamLayout& layout, const std::vector<int>& hidden, bool with_targets, Rng& rng)
      : layout_(layout), with_targets_(with_targets) {
    if (layout.agents < 1) throw ConfigError("a team needs at least one agent");
    std::vector<int> sizes{layout.input_size()};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(layout.action_count);
    for (int i = 0; i < layout.agents; ++i) {
      Rng stream = rng.child("agent/" + std::to_string(i));
      nets_.push_back(Mlp<T>::make(sizes, stream));
    }
    if (with_targets_) targets_ = nets_;
  }

  const TeamLayout& layout() const { return layout_; }
  int agent_count() const { return layout_.agents; }
  int action_count() const { return layout_.action_count; }

  Mlp<T>& net(int i) { return nets_.at(static_cast<std::size_t>(i)); }
  const Mlp<T>& net(int i) const { return nets_.at(static_cast<std::size_t>(i)); }

  bool has_targets() const { return with_targets_; }
  const Mlp<T>& target(int i) const {
    if (!with_targets_) throw UsageError("this agent bank keeps no target networks");
    return targets_.at(static_cast<std::size_t>(i));
  }

  void sync_targets() {
    for (std::size_t i = 0; i < nets_.size(); ++i) copy_parameters(nets_[i], targets_[i]);
  }

  Vector<T> q_values(int i, const Vector<T>& input) const { return predict(net(i), input); }

  std::vector<int> greedy(const std::vector<Vector<T>>& inputs) const {
    std::vector<int> out(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      out[i] = static_cast<int>(argmax_lowest(q_values(static_cast<int>(i), inputs[i])));
    }
    return out;
  }

 private:
  TeamLayout layout_;
  bool with_targets_;
  std::vector<Mlp<T>> nets_;
  std::vector<Mlp<T>> targets_;
};

/// Independent epsilon-greedy choice per agent.
template <typename T>
std::vector<int> select_actions(const AgentBank<T>& bank, const std::vector<Vector<T>>& inputs, double eps, Rng& rng) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw UsageError("epsilon must lie in [0, 1]");
  if (static_cast<int>(inputs.size()) != bank.agent_count()) throw ConfigError("one input per agent expected");
  std::vector<int> actions(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (rng.uniform() < eps) {
      actions[i] = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(bank.action_count())));
    } else {
      actions[i] = static_cast<int>(argmax_lowest(bank.q_values(static_cast<int>(i), inputs[i])));
    }
  }
  return actions;
}

/// Greedy action per column of a Q-value matrix (actions x batch).
template <typename T>
std::vector<int> argmax_columns(const Matrix<T>& q) {
  std::vector<int> out(static_cast<std::size_t>(q.cols()));
  for (Eigen::Index c = 0; c < q.cols(); ++c) out[static_cast<std::size_t>(c)] = static_cast<int>(argmax_lowest(q.col(c)));
  return out;
}

template <typename T>
RowVector<T> chosen_entries(const Matrix<T>& q, const std::vector<int>& actions) {
  RowVector<T> out(q.cols());
  for (Eigen::Index c = 0; c < q.cols(); ++c) out(c) = q(actions[static_cast<std::size_t>(c)], c);
  return out;
}

/// Gradient of mean_b (Q(o_b, a_b) - target_b)^2. Only the taken-action
/// entry of each column receives gradient.
template <typename T>
std::pair<GradientSet<T>, double> regression_gradients(const Mlp<T>& net, const Matrix<T>& inputs,
                                                       const std::vector<int>& actions, const RowVector<T>& targets) {
  const auto cache = forward(net, inputs);
  const auto n = inputs.cols();
  const RowVector<T> diff = chosen_entries(cache.output(), actions) - targets;
  Matrix<T> grad_out = Matrix<T>::Zero(net.output_size(), n);
  for (Eigen::Index c = 0; c < n; ++c) grad_out(actions[static_cast<std::size_t>(c)], c) = T(2) * diff(c) / T(n);
  const double loss = static_cast<double>(diff.squaredNorm()) / static_cast<double>(n);
  return {backward(net, cache, grad_out), loss};
}

}  // namespace rdn::marl
