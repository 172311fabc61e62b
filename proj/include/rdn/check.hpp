#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "rdn/env/oracle.hpp"
#include "rdn/env/signal_levers.hpp"
#include "rdn/lrp/relevance.hpp"
#include "rdn/marl/strategy.hpp"
#include "rdn/tensor_net/finite_diff.hpp"
#include "rdn/tensor_net/mlp.hpp"

namespace rdn::check {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct CheckOptions {
  std::uint64_t seed = 2024;
  int conservation_nets = 100;
  int gradient_nets = 50;
  double denominator_skew = 0.0;  // nonzero corrupts the LRP denominator (negative control)
};

namespace detail {

/// Input width 3..16, 1..max_hidden hidden layers of 4..max_units units.
inline std::vector<int> random_sizes(Rng& rng, int out, int max_hidden, int max_units) {
  std::vector<int> sizes{3 + static_cast<int>(rng.uniform_int(14))};
  const int hidden = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(max_hidden)));
  for (int h = 0; h < hidden; ++h) {
    sizes.push_back(4 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(max_units - 3))));
  }
  sizes.push_back(out);
  return sizes;
}

inline Matrix<double> random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix<double> m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-1.0, 1.0);
  }
  return m;
}

inline void randomize_biases(Mlp<double>& net, Rng& rng) {
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    auto& b = net.mutable_layer(l).bias;
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = rng.uniform(-0.5, 0.5);
  }
}

/// True when some layer sees an all-zero input (every ReLU below it is
/// off). With epsilon = 0 such a sample has 0/0 denominators.
inline bool has_dead_layer(const ActivationCache<double>& cache) {
  for (std::size_t l = 1; l < cache.activations.size(); ++l) {
    if (cache.activations[l].col(0).isZero(0.0)) return true;
  }
  return false;
}

template <typename F>
CheckResult timed(const std::string& name, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  CheckResult r;
  r.name = name;
  try {
    body(r);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline std::string sci(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << std::scientific << v;
  return ss.str();
}

}  // namespace detail

/// Epsilon-rule (epsilon = 0) conservation over random critics: zero-bias
/// nets conserve into the inputs, biased nets conserve once bias_absorbed
/// is counted. Tolerance 1e-9 * max(1, |Q_tot|).
inline CheckResult check_conservation(const CheckOptions& opt = {}) {
  return detail::timed("lrp_conservation", [&](CheckResult& r) {
    Rng rng = Rng(opt.seed).child("conservation");
    const auto rule = lrp::LrpRule::epsilon_rule(0.0);
    double worst = 0.0;
    int failures = 0;
    for (int n = 0; n < opt.conservation_nets; ++n) {
      auto net = Mlp<double>::make(detail::random_sizes(rng, 1, 3, 32), rng);
      for (int biased = 0; biased < 2; ++biased) {
        if (biased) detail::randomize_biases(net, rng);
        auto cache = forward(net, detail::random_matrix(rng, net.input_size(), 1));
        while (detail::has_dead_layer(cache)) cache = forward(net, detail::random_matrix(rng, net.input_size(), 1));
        const auto rel = lrp::detail::backward_relevance<double>(net, cache, rule, nullptr, opt.denominator_skew);
        const double q = rel.q_tot(0);
        double distributed = rel.input.col(0).sum();
        if (biased) distributed += rel.bias_absorbed.col(0).sum();
        const double err = std::abs(q - distributed) / std::max(1.0, std::abs(q));
        worst = std::max(worst, err);
        if (!(err <= 1e-9)) ++failures;
      }
    }
    r.pass = failures == 0;
    r.detail = std::to_string(opt.conservation_nets) + " nets x {zero bias, bias}: worst relative residual " +
               detail::sci(worst) + " (tol 1e-9)";
  });
}

/// backward() against central differences (h = 1e-6) on random nets of at
/// most 3 layers and 16 units.
inline CheckResult check_gradients(const CheckOptions& opt = {}) {
  return detail::timed("gradient_check", [&](CheckResult& r) {
    Rng rng = Rng(opt.seed).child("gradients");
    double worst = 0.0;
    for (int n = 0; n < opt.gradient_nets; ++n) {
      const int outputs = 1 + static_cast<int>(rng.uniform_int(4));
      auto net = Mlp<double>::make(detail::random_sizes(rng, outputs, 2, 16), rng);
      detail::randomize_biases(net, rng);
      const auto x = detail::random_matrix(rng, net.input_size(), 3);
      const auto target = detail::random_matrix(rng, outputs, 3);
      auto loss = [&](const Matrix<double>& y) { return 0.5 * (y - target).squaredNorm(); };
      const auto cache = forward(net, x);
      const auto analytic = backward(net, cache, Matrix<double>(cache.output() - target));
      const auto numeric = finite_diff_grad<double>(net, x, loss, 1e-6);
      worst = std::max(worst, max_relative_error(analytic, numeric));
    }
    r.pass = worst <= 1e-5;
    r.detail = std::to_string(opt.gradient_nets) + " nets: max relative error " + detail::sci(worst) + " (tol 1e-5)";
  });
}

/// VDN mixing: the mixed value is the exact sum of chosen-action Q-values,
/// and dQ_tot/dQ_i == 1 by central differences on each agent's output bias.
inline CheckResult check_vdn_identity(const CheckOptions& opt = {}) {
  return detail::timed("vdn_identity", [&](CheckResult& r) {
    Rng rng = Rng(opt.seed).child("vdn");
    marl::TeamLayout layout;
    layout.agents = 3;
    layout.observation_size = 5;
    layout.action_count = 4;
    marl::StrategySettings settings;
    settings.agent_hidden = {16};
    marl::VdnStrategy<double> vdn(layout, settings, rng);

    const Eigen::Index n = 8;
    marl::Batch<double> batch;
    for (int i = 0; i < layout.agents; ++i) {
      batch.inputs.push_back(detail::random_matrix(rng, layout.input_size(), n));
      std::vector<int> acts;
      for (Eigen::Index c = 0; c < n; ++c) acts.push_back(static_cast<int>(rng.uniform_int(4)));
      batch.actions.push_back(acts);
    }
    batch.reward = RowVector<double>::Zero(n);
    batch.not_done = RowVector<double>::Zero(n);

    const RowVector<double> mixed = vdn.mixed_value(batch);
    RowVector<double> sum = RowVector<double>::Zero(n);
    for (int i = 0; i < layout.agents; ++i) {
      const auto q = predict(vdn.agents().net(i), batch.inputs[static_cast<std::size_t>(i)]);
      sum += marl::chosen_entries<double>(q, batch.actions[static_cast<std::size_t>(i)]);
    }
    const bool exact = (mixed.array() == sum.array()).all();

    double worst = 0.0;
    const double h = 1e-6;
    for (int i = 0; i < layout.agents; ++i) {
      for (Eigen::Index c = 0; c < n; ++c) {
        const int a = batch.actions[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
        auto& net = vdn.agents().net(i);
        const std::size_t out = net.layer_count() - 1;
        const double b0 = net.layer(out).bias(a);
        net.mutable_layer(out).bias(a) = b0 + h;
        const double up = vdn.mixed_value(batch)(c);
        net.mutable_layer(out).bias(a) = b0 - h;
        const double down = vdn.mixed_value(batch)(c);
        net.mutable_layer(out).bias(a) = b0;
        worst = std::max(worst, std::abs((up - down) / (2 * h) - 1.0));
      }
    }
    r.pass = exact && worst <= 1e-6;
    r.detail = std::string("sum ") + (exact ? "exact" : "NOT exact") + ", max |dQ_tot/dQ_i - 1| " + detail::sci(worst) +
               " (tol 1e-6)";
  });
}

/// Exhaustive lever oracle: optimum 1.0 for several team shapes, the
/// returned policy wins when replayed, and the uniform-random win
/// probability matches (1/K)^n_e * ((K-1)/K)^n_r.
inline CheckResult check_lever_oracle(const CheckOptions& = {}) {
  return detail::timed("lever_oracle", [&](CheckResult& r) {
    struct Case {
      int essential, redundant, levers;
    };
    const Case cases[] = {{2, 1, 2}, {1, 0, 2}, {3, 2, 3}, {4, 4, 2}};
    std::string detail;
    bool ok = true;
    for (const auto& c : cases) {
      env::EnvSpec spec;
      spec.n_essential = c.essential;
      spec.n_redundant = c.redundant;
      spec.levers = c.levers;
      const auto oracle = env::enumerate_oracle(spec);
      ok = ok && oracle.optimal_value == 1.0;
      env::SignalLevers game(spec);
      for (int t = 0; t < spec.levers; ++t) {
        game.reset_to(t);
        const auto step = game.step(oracle.policy.at(static_cast<std::size_t>(t)).joint_actions.front());
        ok = ok && step.win;
      }
      const int m = spec.agent_count();
      const auto count = static_cast<std::uint64_t>(std::llround(std::pow(spec.levers, m)));
      double wins = 0.0;
      std::vector<int> actions(static_cast<std::size_t>(m));
      for (int t = 0; t < spec.levers; ++t) {
        for (std::uint64_t code = 0; code < count; ++code) {
          env::detail::decode_joint(code, spec.levers, actions);
          wins += env::SignalLevers::reward(spec, t, actions);
        }
      }
      const double random = wins / (static_cast<double>(count) * spec.levers);
      const double expected = std::pow(1.0 / spec.levers, c.essential) *
                              std::pow((spec.levers - 1.0) / spec.levers, c.redundant);
      ok = ok && std::abs(random - expected) <= 1e-12;
      detail += (detail.empty() ? "" : "; ") + std::to_string(c.essential) + "e+" + std::to_string(c.redundant) +
                "r K=" + std::to_string(c.levers) + " optimum " + (oracle.optimal_value == 1.0 ? std::string("1") : std::to_string(oracle.optimal_value));
    }
    r.pass = ok;
    r.detail = detail;
  });
}

inline std::vector<CheckResult> run_checks(const CheckOptions& opt = {}) {
  return {check_conservation(opt), check_gradients(opt), check_vdn_identity(opt), check_lever_oracle(opt)};
}

}  // namespace rdn::check
