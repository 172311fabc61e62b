#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "rdn/errors.hpp"
#include "rdn/tensor_net/mlp.hpp"

namespace rdn {

enum class OptimizerKind { adam, sgd };

struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Per-network optimizer state. Adam moments mirror the parameter shapes.
template <typename T>
class OptimizerState {
 public:
  OptimizerState() = default;
  OptimizerState(const OptimizerSettings& settings, const Mlp<T>& net)
      : settings_(settings), first_(zero_gradients(net)), second_(zero_gradients(net)) {}

  const OptimizerSettings& settings() const { return settings_; }
  std::int64_t step_count() const { return steps_; }
  const GradientSet<T>& first_moment() const { return first_; }
  const GradientSet<T>& second_moment() const { return second_; }

  template <typename U>
  friend void optimize_step(Mlp<U>& net, const GradientSet<U>& grads, OptimizerState<U>& opt);

 private:
  OptimizerSettings settings_;
  GradientSet<T> first_;
  GradientSet<T> second_;
  std::int64_t steps_ = 0;
};

/// Applies one SGD or bias-corrected Adam update. The gradients are checked
/// for non-finite entries before anything is mutated.
template <typename T>
void optimize_step(Mlp<T>& net, const GradientSet<T>& grads, OptimizerState<T>& opt) {
  if (grads.layer_count() != net.layer_count() || opt.first_.layer_count() != net.layer_count()) {
    throw ConfigError("optimize_step: gradient/optimizer shapes do not match the network");
  }
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto& layer = net.layer(l);
    if (grads.weight[l].rows() != layer.fan_out() || grads.weight[l].cols() != layer.fan_in() ||
        grads.bias[l].size() != layer.fan_out()) {
      throw ConfigError("optimize_step: gradient shape mismatch at layer " + std::to_string(l));
    }
    if (!grads.weight[l].allFinite() || !grads.bias[l].allFinite()) {
      throw TrainingError("non-finite gradient in layer " + std::to_string(l), static_cast<int>(l));
    }
  }

  ++opt.steps_;
  const auto& s = opt.settings_;
  const T lr = static_cast<T>(s.learning_rate);
  if (s.kind == OptimizerKind::sgd) {
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      auto& layer = net.mutable_layer(l);
      layer.weight -= lr * grads.weight[l];
      layer.bias -= lr * grads.bias[l];
    }
    return;
  }

  const T b1 = static_cast<T>(s.beta1);
  const T b2 = static_cast<T>(s.beta2);
  const T eps = static_cast<T>(s.epsilon);
  const T c1 = T(1) - static_cast<T>(std::pow(s.beta1, static_cast<double>(opt.steps_)));
  const T c2 = T(1) - static_cast<T>(std::pow(s.beta2, static_cast<double>(opt.steps_)));
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    auto& layer = net.mutable_layer(l);
    update(layer.weight, grads.weight[l], opt.first_.weight[l], opt.second_.weight[l]);
    update(layer.bias, grads.bias[l], opt.first_.bias[l], opt.second_.bias[l]);
  }
}

}  // namespace rdn
