#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rdn/errors.hpp"
#include "rdn/lrp/relevance.hpp"
#include "rdn/marl/agents.hpp"
#include "rdn/marl/critic.hpp"
#include "rdn/marl/replay.hpp"
#include "rdn/tensor_net/optimizer.hpp"

namespace rdn::marl {

enum class StrategyKind { rdn, vdn, iql };

inline std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::rdn: return "rdn";
    case StrategyKind::vdn: return "vdn";
    default: return "iql";
  }
}

inline StrategyKind parse_strategy(const std::string& s) {
  if (s == "rdn") return StrategyKind::rdn;
  if (s == "vdn") return StrategyKind::vdn;
  if (s == "iql") return StrategyKind::iql;
  throw ConfigError("unknown strategy '" + s + "' (expected rdn, vdn or iql)");
}

struct StrategySettings {
  double gamma = 0.99;
  int target_sync = 200;
  OptimizerSettings agent_optimizer{};
  OptimizerSettings critic_optimizer{};
  lrp::LrpRule rule = lrp::LrpRule::alpha_beta(1.0, 0.0);
  bool decompose_target = false;
  CriticInput critic_input = CriticInput::local_concat;
  std::vector<int> agent_hidden{64};
  std::vector<int> critic_hidden{64, 64};
};

/// Outcome of one gradient step. `mean_abs_credit[i]` is the batch mean of
/// |Q~_i| for RDN, and of |Q_i(o_i, a_i)| for VDN and IQL.
struct StepReport {
  double critic_loss = 0.0;
  double agent_loss = 0.0;
  double mean_abs_residual = 0.0;
  std::vector<double> mean_abs_credit;
};

/// Uniform train-step contract shared by RDN, VDN and IQL.
template <typename T>
class Strategy {
 public:
  Strategy(const TeamLayout& layout, const StrategySettings& settings, bool agent_targets, Rng& rng)
      : settings_(settings), bank_(layout, settings.agent_hidden, agent_targets, rng) {
    if (!(settings.gamma >= 0.0 && settings.gamma < 1.0)) throw ConfigError("training.gamma must lie in [0, 1)");
    if (settings.target_sync < 1) throw ConfigError("strategy.target_sync must be >= 1");
    for (int i = 0; i < layout.agents; ++i) agent_opt_.emplace_back(settings.agent_optimizer, bank_.net(i));
  }
  virtual ~Strategy() = default;

  virtual StrategyKind kind() const = 0;
  virtual StepReport train_step(const Batch<T>& batch) = 0;

  /// Whether batches must carry the ground-truth state.
  virtual bool needs_state() const { return false; }

  AgentBank<T>& agents() { return bank_; }
  const AgentBank<T>& agents() const { return bank_; }
  virtual CriticPair<T>* critic() { return nullptr; }
  virtual const CriticPair<T>* critic() const { return nullptr; }
  const StrategySettings& settings() const { return settings_; }

 protected:
  T gamma() const { return static_cast<T>(settings_.gamma); }

  static void check_loss(double loss, const char* what) {
    if (!std::isfinite(loss)) throw TrainingError(std::string("non-finite ") + what);
  }

  RowVector<T> greedy_bootstrap_max(const Batch<T>& batch, int agent, bool use_target) const {
    const auto& net = use_target ? bank_.target(agent) : bank_.net(agent);
    const Matrix<T> q = predict(net, batch.next_inputs[static_cast<std::size_t>(agent)]);
    return q.colwise().maxCoeff();
  }

  StrategySettings settings_;
  AgentBank<T> bank_;
  std::vector<OptimizerState<T>> agent_opt_;
};

/// Per-sample decomposition of the critic's value onto the agents.
template <typename T>
struct Decomposition {
  Matrix<T> credit;           // agents x B, Q~_i per sample
  RowVector<T> unattributed;  // relevance on unowned inputs
  RowVector<T> bias_absorbed; // summed over layers
  RowVector<T> q_tot;
  RowVector<T> seed;
  RowVector<T> residual;      // seed - (sum credit + unattributed + bias)
};

/// Relevance decomposition: a joint critic is trained on the TD target and
/// its output, redistributed onto the inputs by LRP and summed per agent,
/// becomes each agent's regression target.
template <typename T>
class RdnStrategy final : public Strategy<T> {
  using Base = Strategy<T>;

 public:
  RdnStrategy(const TeamLayout& layout, std::vector<int> state_owner, const StrategySettings& settings, Rng& rng)
      : Base(layout, settings, false, rng),
        critic_(layout, settings.critic_input, std::move(state_owner), settings.critic_hidden, settings.target_sync, rng),
        critic_opt_(settings.critic_optimizer, critic_.online()) {
    settings.rule.validate();
  }

  StrategyKind kind() const override { return StrategyKind::rdn; }
  bool needs_state() const override { return critic_.mode() == CriticInput::full_state; }
  CriticPair<T>* critic() override { return &critic_; }
  const CriticPair<T>* critic() const override { return &critic_; }

  /// y = r + gamma (1 - done) Q_tot_target(o', a'), with a' the online
  /// agents' greedy actions at o'.
  RowVector<T> td_target(const Batch<T>& batch) const {
    RowVector<T> y = batch.reward;
    if (!batch.any_bootstrap() || this->settings_.gamma == 0.0) return y;
    std::vector<std::vector<int>> next_actions;
    for (int i = 0; i < this->bank_.agent_count(); ++i) {
      next_actions.push_back(argmax_columns<T>(predict(this->bank_.net(i), batch.next_inputs[static_cast<std::size_t>(i)])));
    }
    const Matrix<T> x_next = critic_.encode(batch.next_inputs, batch.next_state, next_actions);
    const RowVector<T> q_next = predict(critic_.target(), x_next).row(0);
    y += this->gamma() * batch.not_done.cwiseProduct(q_next);
    return y;
  }

  /// LRP on the current online critic at (o, a). Seeds with Q_tot, or with
  /// `seeds` when given.
  Decomposition<T> decompose(const Batch<T>& batch, const RowVector<T>* seeds = nullptr) const {
    const Matrix<T> x = critic_.encode(batch.inputs, batch.state, batch.actions);
    const auto cache = forward(critic_.online(), x);
    const auto rel = lrp::lrp_backward_batch(critic_.online(), cache, this->settings_.rule, seeds);
    const auto n = batch.size();
    const int m = this->bank_.agent_count();
    Decomposition<T> d;
    d.credit = Matrix<T>::Zero(m, n);
    d.unattributed = RowVector<T>::Zero(n);
    d.bias_absorbed = rel.bias_absorbed.colwise().sum();
    d.q_tot = rel.q_tot;
    d.seed = rel.seed;
    d.residual.resize(n);
    const auto& slices = critic_.slices();
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto sums = lrp::aggregate_per_agent<T>(rel.input.col(c), slices);
      T distributed = sums.unattributed + d.bias_absorbed(c);
      for (int i = 0; i < m; ++i) {
        d.credit(i, c) = sums.per_agent[static_cast<std::size_t>(i)];
        distributed += sums.per_agent[static_cast<std::size_t>(i)];
      }
      d.unattributed(c) = sums.unattributed;
      d.residual(c) = d.seed(c) - distributed;
    }
    return d;
  }

  /// Agent i's regression gradient toward row i of `credit`; nothing else.
  std::pair<GradientSet<T>, double> agent_gradient(const Batch<T>& batch, int agent, const Matrix<T>& credit) const {
    return regression_gradients<T>(this->bank_.net(agent), batch.inputs[static_cast<std::size_t>(agent)],
                                   batch.actions[static_cast<std::size_t>(agent)], credit.row(agent));
  }

  StepReport train_step(const Batch<T>& batch) override {
    const auto n = batch.size();
    if (n == 0) throw UsageError("empty training batch");
    StepReport report;

    // Critic regression on the TD target.
    const RowVector<T> y = td_target(batch);
    {
      const Matrix<T> x = critic_.encode(batch.inputs, batch.state, batch.actions);
      const auto cache = forward(critic_.online(), x);
      const RowVector<T> diff = cache.output().row(0) - y;
      report.critic_loss = static_cast<double>(diff.squaredNorm()) / static_cast<double>(n);
      this->check_loss(report.critic_loss, "critic loss");
      const Matrix<T> grad_out = (T(2) / T(n)) * diff;
      optimize_step(critic_.online(), backward(critic_.online(), cache, grad_out), critic_opt_);
    }

    // Decompose with the updated critic; per-agent regression.
    const Decomposition<T> d = this->settings_.decompose_target ? decompose(batch, &y) : decompose(batch);
    report.mean_abs_residual = static_cast<double>(d.residual.cwiseAbs().mean());
    const int m = this->bank_.agent_count();
    report.mean_abs_credit.resize(static_cast<std::size_t>(m));
    double agent_loss = 0.0;
    for (int i = 0; i < m; ++i) {
      auto [grads, loss] = agent_gradient(batch, i, d.credit);
      this->check_loss(loss, "agent loss");
      optimize_step(this->bank_.net(i), grads, this->agent_opt_[static_cast<std::size_t>(i)]);
      agent_loss += loss;
      report.mean_abs_credit[static_cast<std::size_t>(i)] = static_cast<double>(d.credit.row(i).cwiseAbs().mean());
    }
    report.agent_loss = agent_loss / m;

    critic_.note_update();
    return report;
  }

 private:
  CriticPair<T> critic_;
  OptimizerState<T> critic_opt_;
};

/// Value decomposition by summation: Q_tot = sum_i Q_i(o_i, a_i), trained
/// end to end against a target built from per-agent target networks.
template <typename T>
class VdnStrategy final : public Strategy<T> {
  using Base = Strategy<T>;

 public:
  VdnStrategy(const TeamLayout& layout, const StrategySettings& settings, Rng& rng) : Base(layout, settings, true, rng) {}

  StrategyKind kind() const override { return StrategyKind::vdn; }

  /// sum_i Q_i(o_i, a_i) per sample.
  RowVector<T> mixed_value(const Batch<T>& batch) const {
    RowVector<T> total = RowVector<T>::Zero(batch.size());
    for (int i = 0; i < this->bank_.agent_count(); ++i) {
      const auto q = predict(this->bank_.net(i), batch.inputs[static_cast<std::size_t>(i)]);
      total += chosen_entries<T>(q, batch.actions[static_cast<std::size_t>(i)]);
    }
    return total;
  }

  RowVector<T> td_target(const Batch<T>& batch) const {
    RowVector<T> y = batch.reward;
    if (!batch.any_bootstrap() || this->settings_.gamma == 0.0) return y;
    RowVector<T> next = RowVector<T>::Zero(batch.size());
    for (int i = 0; i < this->bank_.agent_count(); ++i) next += this->greedy_bootstrap_max(batch, i, true);
    y += this->gamma() * batch.not_done.cwiseProduct(next);
    return y;
  }

  StepReport train_step(const Batch<T>& batch) override {
    const auto n = batch.size();
    if (n == 0) throw UsageError("empty training batch");
    const int m = this->bank_.agent_count();
    StepReport report;
    report.mean_abs_credit.resize(static_cast<std::size_t>(m));

    const RowVector<T> y = td_target(batch);
    std::vector<ActivationCache<T>> caches;
    RowVector<T> total = RowVector<T>::Zero(n);
    for (int i = 0; i < m; ++i) {
      caches.push_back(forward(this->bank_.net(i), batch.inputs[static_cast<std::size_t>(i)]));
      const RowVector<T> chosen = chosen_entries<T>(caches.back().output(), batch.actions[static_cast<std::size_t>(i)]);
      report.mean_abs_credit[static_cast<std::size_t>(i)] = static_cast<double>(chosen.cwiseAbs().mean());
      total += chosen;
    }
    const RowVector<T> diff = total - y;
    report.agent_loss = static_cast<double>(diff.squaredNorm()) / static_cast<double>(n);
    this->check_loss(report.agent_loss, "VDN loss");

    // d total / d Q_i(o_i, a_i) = 1 for every agent.
    for (int i = 0; i < m; ++i) {
      const auto& acts = batch.actions[static_cast<std::size_t>(i)];
      Matrix<T> grad_out = Matrix<T>::Zero(this->bank_.action_count(), n);
      for (Eigen::Index c = 0; c < n; ++c) grad_out(acts[static_cast<std::size_t>(c)], c) = T(2) * diff(c) / T(n);
      const auto grads = backward(this->bank_.net(i), caches[static_cast<std::size_t>(i)], grad_out);
      optimize_step(this->bank_.net(i), grads, this->agent_opt_[static_cast<std::size_t>(i)]);
    }
    if (++updates_ % this->settings_.target_sync == 0) this->bank_.sync_targets();
    return report;
  }

 private:
  long updates_ = 0;
};

/// Independent DQN learners on the shared reward.
template <typename T>
class IqlStrategy final : public Strategy<T> {
  using Base = Strategy<T>;

 public:
  IqlStrategy(const TeamLayout& layout, const StrategySettings& settings, Rng& rng) : Base(layout, settings, true, rng) {}

  StrategyKind kind() const override { return StrategyKind::iql; }

  RowVector<T> td_target(const Batch<T>& batch, int agent) const {
    RowVector<T> y = batch.reward;
    if (!batch.any_bootstrap() || this->settings_.gamma == 0.0) return y;
    y += this->gamma() * batch.not_done.cwiseProduct(this->greedy_bootstrap_max(batch, agent, true));
    return y;
  }

  StepReport train_step(const Batch<T>& batch) override {
    if (batch.size() == 0) throw UsageError("empty training batch");
    const int m = this->bank_.agent_count();
    StepReport report;
    report.mean_abs_credit.resize(static_cast<std::size_t>(m));
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
      const RowVector<T> y = td_target(batch, i);
      const auto& inputs = batch.inputs[static_cast<std::size_t>(i)];
      const auto& acts = batch.actions[static_cast<std::size_t>(i)];
      auto [grads, loss] = regression_gradients<T>(this->bank_.net(i), inputs, acts, y);
      this->check_loss(loss, "IQL loss");
      report.mean_abs_credit[static_cast<std::size_t>(i)] =
          static_cast<double>(chosen_entries<T>(predict(this->bank_.net(i), inputs), acts).cwiseAbs().mean());
      optimize_step(this->bank_.net(i), grads, this->agent_opt_[static_cast<std::size_t>(i)]);
      total += loss;
    }
    report.agent_loss = total / m;
    if (++updates_ % this->settings_.target_sync == 0) this->bank_.sync_targets();
    return report;
  }

 private:
  long updates_ = 0;
};

template <typename T>
std::unique_ptr<Strategy<T>> make_strategy(StrategyKind kind, const TeamLayout& layout, std::vector<int> state_owner,
                                           const StrategySettings& settings, Rng& rng) {
  switch (kind) {
    case StrategyKind::rdn: return std::make_unique<RdnStrategy<T>>(layout, std::move(state_owner), settings, rng);
    case StrategyKind::vdn: return std::make_unique<VdnStrategy<T>>(layout, settings, rng);
    default: return std::make_unique<IqlStrategy<T>>(layout, settings, rng);
  }
}

}  // namespace rdn::marl
