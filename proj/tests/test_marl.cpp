#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "rdn/marl/strategy.hpp"

using namespace rdn;
using namespace rdn::marl;
using rdn::testing::random_matrix;
using rdn::testing::vec;

namespace {

TeamLayout layout(int agents, int obs, int actions) {
  TeamLayout l;
  l.agents = agents;
  l.observation_size = obs;
  l.action_count = actions;
  return l;
}

Batch<double> random_batch(Rng& rng, const TeamLayout& l, Eigen::Index n, bool terminal = false) {
  Batch<double> b;
  for (int i = 0; i < l.agents; ++i) {
    b.inputs.push_back(random_matrix(rng, l.input_size(), n));
    b.next_inputs.push_back(terminal ? Matrix<double>(Matrix<double>::Zero(l.input_size(), n))
                                     : random_matrix(rng, l.input_size(), n));
    std::vector<int> a;
    for (Eigen::Index c = 0; c < n; ++c) a.push_back(static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(l.action_count))));
    b.actions.push_back(a);
  }
  b.reward = RowVector<double>::Zero(n);
  for (Eigen::Index c = 0; c < n; ++c) b.reward(c) = rng.uniform(-1.0, 1.0);
  b.not_done = RowVector<double>::Constant(n, terminal ? 0.0 : 1.0);
  return b;
}

/// Sets every weight to zero and the output bias to `value`.
void make_constant(Mlp<double>& net, const Vector<double>& value) {
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    net.mutable_layer(l).weight.setZero();
    net.mutable_layer(l).bias.setZero();
  }
  net.mutable_layer(net.layer_count() - 1).bias = value;
}

double chi_square(const std::vector<int>& counts, double expected) {
  double chi = 0.0;
  for (int c : counts) chi += (c - expected) * (c - expected) / expected;
  return chi;
}

bool same_parameters(const Mlp<double>& a, const Mlp<double>& b) {
  for (std::size_t l = 0; l < a.layer_count(); ++l) {
    if (a.layer(l).weight != b.layer(l).weight || a.layer(l).bias != b.layer(l).bias) return false;
  }
  return true;
}

}  // namespace

TEST(Replay, FifoEviction) {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) {
    Transition t;
    t.reward = i;
    buf.push(t);
  }
  EXPECT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.at(0).reward, 2.0);
  EXPECT_EQ(buf.at(1).reward, 3.0);
  EXPECT_EQ(buf.at(2).reward, 4.0);
  EXPECT_THROW(buf.at(3), UsageError);
}

TEST(Replay, ZeroCapacityRejected) { EXPECT_THROW(ReplayBuffer(0), ConfigError); }

TEST(Replay, EmptySampleIsUsageError) {
  ReplayBuffer buf(4);
  Rng rng(1);
  EXPECT_THROW(buf.sample(2, rng), UsageError);
}

TEST(Replay, SamplingIsUniform) {
  ReplayBuffer buf(10);
  for (int i = 0; i < 10; ++i) {
    Transition t;
    t.reward = i;
    buf.push(t);
  }
  Rng rng(2);
  std::vector<int> counts(10, 0);
  for (const auto* t : buf.sample(20000, rng)) ++counts[static_cast<std::size_t>(t->reward)];
  EXPECT_LT(chi_square(counts, 2000.0), 27.88);  // 9 dof, p = 0.001
}

TEST(Replay, ObservationStackKeepsNewestLast) {
  auto l = layout(1, 2, 2);
  l.stack_depth = 2;
  ObservationStack stack(l);
  env::JointObservation a{{{1.0, 2.0}}, {}, {}};
  env::JointObservation b{{{3.0, 4.0}}, {}, {}};
  stack.reset(a);
  EXPECT_EQ(stack.flat(), (std::vector<float>{1, 2, 1, 2}));
  stack.push(b);
  EXPECT_EQ(stack.flat(), (std::vector<float>{1, 2, 3, 4}));
  EXPECT_EQ(stack.inputs<double>().front(), vec({1, 2, 3, 4}));
}

TEST(Replay, BatchArityChecked) {
  const auto l = layout(2, 2, 2);
  Transition t;
  t.inputs = {0, 0, 0, 0};
  t.actions = {0};
  t.terminal = true;
  EXPECT_THROW(make_batch<double>({&t}, l, false), ConfigError);
}

TEST(Epsilon, Schedule) {
  EpsilonSchedule s{1.0, 0.05, 1000};
  EXPECT_EQ(epsilon_at(s, 0), 1.0);
  EXPECT_NEAR(epsilon_at(s, 500), 0.525, 1e-12);
  EXPECT_EQ(epsilon_at(s, 1000), 0.05);
  EXPECT_EQ(epsilon_at(s, 5000), 0.05);
  EXPECT_THROW(epsilon_at(s, -1), UsageError);
  EXPECT_THROW((EpsilonSchedule{0.1, 0.5, 10}.validate()), ConfigError);
}

TEST(SelectActions, FullExplorationIsUniform) {
  Rng init(3);
  AgentBank<double> bank(layout(1, 3, 4), {8}, false, init);
  Rng rng(4);
  std::vector<int> counts(4, 0);
  const std::vector<Vector<double>> in{vec({0.1, 0.2, 0.3})};
  for (int k = 0; k < 20000; ++k) ++counts[static_cast<std::size_t>(select_actions(bank, in, 1.0, rng)[0])];
  EXPECT_LT(chi_square(counts, 5000.0), 16.27);  // 3 dof, p = 0.001
}

TEST(SelectActions, GreedyBreaksTiesTowardLowestIndex) {
  Rng init(5);
  AgentBank<double> bank(layout(1, 2, 3), {}, false, init);
  make_constant(bank.net(0), vec({0.1, 0.9, 0.9}));
  Rng rng(6);
  const std::vector<Vector<double>> in{vec({1.0, -1.0})};
  EXPECT_EQ(select_actions(bank, in, 0.0, rng), (std::vector<int>{1}));
  EXPECT_THROW(select_actions(bank, in, 1.5, rng), UsageError);
}

TEST(SelectActions, DeterministicForSameStream) {
  Rng init(7);
  AgentBank<double> bank(layout(3, 4, 5), {8}, false, init);
  Rng a(8), b(8), data(9);
  for (int k = 0; k < 200; ++k) {
    std::vector<Vector<double>> in;
    for (int i = 0; i < 3; ++i) in.push_back(random_matrix(data, 4, 1).col(0));
    EXPECT_EQ(select_actions(bank, in, 0.3, a), select_actions(bank, in, 0.3, b));
  }
}

TEST(AgentBank, SameStreamSameAgentsAcrossBanks) {
  Rng r1(10), r2(10);
  AgentBank<double> with(layout(2, 3, 2), {4}, true, r1);
  AgentBank<double> without(layout(2, 3, 2), {4}, false, r2);
  for (int i = 0; i < 2; ++i) EXPECT_TRUE(same_parameters(with.net(i), without.net(i)));
  EXPECT_THROW(without.target(0), UsageError);
}

TEST(Critic, LocalConcatLayoutAndSlices) {
  Rng rng(11);
  CriticPair<double> critic(layout(2, 3, 2), CriticInput::local_concat, {}, {8}, 200, rng);
  EXPECT_EQ(critic.input_size(), 10);
  const std::vector<Matrix<double>> in{Matrix<double>::Constant(3, 1, 7.0), Matrix<double>::Constant(3, 1, 9.0)};
  const auto x = critic.encode(in, Matrix<double>(), {{1}, {0}});
  const std::vector<double> expected{7, 7, 7, 0, 1, 9, 9, 9, 1, 0};
  for (int k = 0; k < 10; ++k) EXPECT_EQ(x(k, 0), expected[static_cast<std::size_t>(k)]);
  for (std::size_t k = 0; k < 10; ++k) EXPECT_EQ(critic.slices().owner(k), k < 5 ? 0 : 1);
}

TEST(Critic, FullStateSlicesFollowOwnership) {
  auto l = layout(2, 3, 2);
  l.state_size = 4;
  Rng rng(12);
  CriticPair<double> critic(l, CriticInput::full_state, {-1, -1, 0, 1}, {8}, 200, rng);
  EXPECT_EQ(critic.input_size(), 8);
  const std::vector<int> owners{-1, -1, 0, 1, 0, 0, 1, 1};
  for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(critic.slices().owner(k), owners[k]);
  EXPECT_THROW(CriticPair<double>(l, CriticInput::full_state, {-1, 0}, {8}, 200, rng), ConfigError);
}

TEST(Critic, ActionChangeOnlyTouchesThatAgentsSlice) {
  Rng rng(13);
  CriticPair<double> critic(layout(3, 2, 4), CriticInput::local_concat, {}, {8}, 200, rng);
  std::vector<Matrix<double>> in;
  for (int i = 0; i < 3; ++i) in.push_back(random_matrix(rng, 2, 1));
  const auto a = critic.encode(in, Matrix<double>(), {{0}, {1}, {2}});
  const auto b = critic.encode(in, Matrix<double>(), {{0}, {3}, {2}});
  for (Eigen::Index k = 0; k < a.rows(); ++k) {
    if (a(k, 0) != b(k, 0)) EXPECT_EQ(critic.slices().owner(static_cast<std::size_t>(k)), 1);
  }
  EXPECT_THROW(critic.encode(in, Matrix<double>(), {{0}, {4}, {2}}), ConfigError);
}

TEST(Critic, TargetFrozenBetweenSyncs) {
  Rng rng(14);
  CriticPair<double> critic(layout(2, 2, 2), CriticInput::local_concat, {}, {4}, 3, rng);
  EXPECT_TRUE(same_parameters(critic.online(), critic.target()));
  const Mlp<double> before = critic.target();
  for (int k = 1; k <= 3; ++k) {
    critic.online().mutable_layer(0).weight(0, 0) += 1.0;
    const bool synced = critic.note_update();
    EXPECT_EQ(synced, k == 3);
    if (k < 3) {
      EXPECT_TRUE(same_parameters(critic.target(), before));
    }
  }
  EXPECT_TRUE(same_parameters(critic.online(), critic.target()));
}

namespace {

StrategySettings small_settings(double gamma) {
  StrategySettings s;
  s.gamma = gamma;
  s.agent_hidden = {8};
  s.critic_hidden = {8};
  return s;
}

}  // namespace

TEST(Rdn, TdTargetIgnoresBootstrapWhenGammaIsZero) {
  Rng rng(15);
  const auto l = layout(2, 3, 2);
  RdnStrategy<double> rdn(l, {}, small_settings(0.0), rng);
  auto b = random_batch(rng, l, 1);
  b.reward(0) = 1.0;
  EXPECT_EQ(rdn.td_target(b)(0), 1.0);
}

TEST(Rdn, TdTargetUsesTargetCritic) {
  Rng rng(16);
  const auto l = layout(2, 3, 2);
  RdnStrategy<double> rdn(l, {}, small_settings(0.9), rng);
  make_constant(rdn.critic()->online(), vec({2.0}));
  rdn.critic()->sync();
  auto b = random_batch(rng, l, 1);
  b.reward(0) = 1.0;
  EXPECT_NEAR(rdn.td_target(b)(0), 2.8, 1e-12);
  // A later online change does not move the target until the next sync.
  make_constant(rdn.critic()->online(), vec({5.0}));
  EXPECT_NEAR(rdn.td_target(b)(0), 2.8, 1e-12);
  b.not_done(0) = 0.0;
  EXPECT_EQ(rdn.td_target(b)(0), 1.0);
}

TEST(Rdn, DecompositionConservesPerSample) {
  Rng rng(17);
  const auto l = layout(3, 4, 3);
  auto s = small_settings(0.9);
  s.rule = lrp::LrpRule::epsilon_rule(0.0);
  RdnStrategy<double> rdn(l, {}, s, rng);
  const auto b = random_batch(rng, l, 16);
  const auto d = rdn.decompose(b);
  for (Eigen::Index c = 0; c < 16; ++c) {
    const double q = d.q_tot(c);
    const double total = d.credit.col(c).sum() + d.unattributed(c) + d.bias_absorbed(c);
    EXPECT_NEAR(total, q, 1e-9 * std::max(1.0, std::abs(q)));
    EXPECT_NEAR(d.residual(c), 0.0, 1e-9 * std::max(1.0, std::abs(q)));
    EXPECT_EQ(d.unattributed(c), 0.0);  // local_concat owns every input
  }
}

TEST(Rdn, CustomSeedsAreDistributed) {
  Rng rng(18);
  const auto l = layout(2, 3, 2);
  auto s = small_settings(0.9);
  s.rule = lrp::LrpRule::epsilon_rule(0.0);
  RdnStrategy<double> rdn(l, {}, s, rng);
  const auto b = random_batch(rng, l, 4);
  RowVector<double> seeds(4);
  seeds << 1.0, -2.0, 0.5, 3.0;
  const auto d = rdn.decompose(b, &seeds);
  EXPECT_EQ(d.seed, seeds);
  for (Eigen::Index c = 0; c < 4; ++c) EXPECT_NEAR(d.residual(c), 0.0, 1e-9);
}

TEST(Rdn, AgentGradientDependsOnlyOnOwnCreditRow) {
  Rng rng(19);
  const auto l = layout(3, 4, 3);
  RdnStrategy<double> rdn(l, {}, small_settings(0.9), rng);
  const auto b = random_batch(rng, l, 8);
  Matrix<double> credit = random_matrix(rng, 3, 8);
  const auto [g1, loss1] = rdn.agent_gradient(b, 1, credit);
  credit.row(0).setConstant(100.0);
  credit.row(2).setConstant(-100.0);
  const auto [g2, loss2] = rdn.agent_gradient(b, 1, credit);
  EXPECT_EQ(loss1, loss2);
  for (std::size_t k = 0; k < g1.weight.size(); ++k) {
    EXPECT_EQ(g1.weight[k], g2.weight[k]);
    EXPECT_EQ(g1.bias[k], g2.bias[k]);
  }
}

TEST(Rdn, RegressionTouchesOnlyTakenActionRow) {
  Rng rng(20);
  AgentBank<double> bank(layout(1, 3, 4), {}, false, rng);
  const auto in = random_matrix(rng, 3, 5);
  const std::vector<int> acts{2, 2, 2, 2, 2};
  const auto [g, loss] = regression_gradients<double>(bank.net(0), in, acts, RowVector<double>::Ones(5));
  for (int r = 0; r < 4; ++r) {
    if (r == 2) continue;
    EXPECT_EQ(g.weight[0].row(r).squaredNorm(), 0.0);
    EXPECT_EQ(g.bias[0](r), 0.0);
  }
  EXPECT_GT(g.weight[0].row(2).squaredNorm(), 0.0);
}

TEST(Rdn, TrainStepUpdatesCriticCounterAndReports) {
  Rng rng(21);
  const auto l = layout(2, 3, 2);
  auto s = small_settings(0.9);
  s.target_sync = 2;
  RdnStrategy<double> rdn(l, {}, s, rng);
  const auto b = random_batch(rng, l, 8);
  const Mlp<double> target0 = rdn.critic()->target();
  const auto r1 = rdn.train_step(b);
  EXPECT_EQ(r1.mean_abs_credit.size(), 2u);
  EXPECT_TRUE(std::isfinite(r1.critic_loss));
  EXPECT_TRUE(same_parameters(rdn.critic()->target(), target0));
  rdn.train_step(b);
  EXPECT_EQ(rdn.critic()->updates(), 2);
  EXPECT_TRUE(same_parameters(rdn.critic()->target(), rdn.critic()->online()));
}

TEST(Vdn, MixedValueIsSumOfChosenEntries) {
  Rng rng(22);
  const auto l = layout(3, 2, 3);
  VdnStrategy<double> vdn(l, small_settings(0.9), rng);
  make_constant(vdn.agents().net(0), vec({1.5, 0.0, 0.0}));
  make_constant(vdn.agents().net(1), vec({0.0, -0.5, 0.0}));
  make_constant(vdn.agents().net(2), vec({0.0, 0.0, 2.0}));
  auto b = random_batch(rng, l, 1);
  b.actions = {{0}, {1}, {2}};
  EXPECT_EQ(vdn.mixed_value(b)(0), 3.0);
}

TEST(Vdn, SingleAgentMatchesIql) {
  const auto l = layout(1, 3, 3);
  Rng r1(23), r2(23), data(24);
  VdnStrategy<double> vdn(l, small_settings(0.9), r1);
  IqlStrategy<double> iql(l, small_settings(0.9), r2);
  for (int k = 0; k < 5; ++k) {
    const auto b = random_batch(data, l, 8);
    EXPECT_NEAR((vdn.td_target(b) - iql.td_target(b, 0)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
    vdn.train_step(b);
    iql.train_step(b);
  }
  const auto& a = vdn.agents().net(0);
  const auto& c = iql.agents().net(0);
  for (std::size_t layer = 0; layer < a.layer_count(); ++layer) {
    EXPECT_LT((a.layer(layer).weight - c.layer(layer).weight).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Iql, SymmetricAgentsStaySymmetric) {
  const auto l = layout(2, 3, 2);
  Rng rng(25), data(26);
  IqlStrategy<double> iql(l, small_settings(0.9), rng);
  copy_parameters(iql.agents().net(0), iql.agents().net(1));
  iql.agents().sync_targets();
  auto b = random_batch(data, l, 8);
  b.inputs[1] = b.inputs[0];
  b.next_inputs[1] = b.next_inputs[0];
  b.actions[1] = b.actions[0];
  for (int k = 0; k < 3; ++k) iql.train_step(b);
  EXPECT_TRUE(same_parameters(iql.agents().net(0), iql.agents().net(1)));
}

TEST(Iql, GammaZeroTargetIsReward) {
  const auto l = layout(2, 3, 2);
  Rng rng(27);
  IqlStrategy<double> iql(l, small_settings(0.0), rng);
  const auto b = random_batch(rng, l, 6);
  EXPECT_EQ(iql.td_target(b, 1), b.reward);
}

TEST(Iql, TargetsFrozenBetweenSyncs) {
  const auto l = layout(1, 3, 2);
  auto s = small_settings(0.9);
  s.target_sync = 4;
  Rng rng(28);
  IqlStrategy<double> iql(l, s, rng);
  const Mlp<double> frozen = iql.agents().target(0);
  const auto b = random_batch(rng, l, 8);
  for (int k = 0; k < 3; ++k) {
    iql.train_step(b);
    EXPECT_TRUE(same_parameters(iql.agents().target(0), frozen));
  }
  iql.train_step(b);
  EXPECT_TRUE(same_parameters(iql.agents().target(0), iql.agents().net(0)));
}

TEST(Strategy, GammaValidation) {
  Rng rng(29);
  EXPECT_THROW(IqlStrategy<double>(layout(1, 2, 2), small_settings(1.0), rng), ConfigError);
  EXPECT_EQ(parse_strategy("vdn"), StrategyKind::vdn);
  EXPECT_THROW(parse_strategy("qmix"), ConfigError);
}
