#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "rdn/tensor_net/mlp.hpp"

namespace rdn {

/// (f(x + h) - f(x - h)) / 2h
template <typename T, typename F>
T central_difference(F&& f, T x, T h) {
  return (f(x + h) - f(x - h)) / (T(2) * h);
}

/// Central-difference estimate of d loss(forward(net, x)) / d theta for
/// every parameter. Test oracle: deliberately slow and independent of
/// backward().
template <typename T>
GradientSet<T> finite_diff_grad(const Mlp<T>& net, const Matrix<T>& x,
                                const std::function<T(const Matrix<T>&)>& loss, T h = T(1e-6)) {
  Mlp<T> probe = net;
  GradientSet<T> grads = zero_gradients(net);
  auto evaluate = [&]() { return loss(predict(probe, x)); };
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto& ref = net.layer(l);
    for (Eigen::Index r = 0; r < ref.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < ref.weight.cols(); ++c) {
        const T w = ref.weight(r, c);
        probe.mutable_layer(l).weight(r, c) = w + h;
        const T up = evaluate();
        probe.mutable_layer(l).weight(r, c) = w - h;
        const T down = evaluate();
        probe.mutable_layer(l).weight(r, c) = w;
        grads.weight[l](r, c) = (up - down) / (T(2) * h);
      }
    }
    for (Eigen::Index r = 0; r < ref.bias.size(); ++r) {
      const T b = ref.bias(r);
      probe.mutable_layer(l).bias(r) = b + h;
      const T up = evaluate();
      probe.mutable_layer(l).bias(r) = b - h;
      const T down = evaluate();
      probe.mutable_layer(l).bias(r) = b;
      grads.bias[l](r) = (up - down) / (T(2) * h);
    }
  }
  return grads;
}

/// Largest |a - b| / max(|a|, |b|, floor) over all gradient components.
/// The floor keeps components that are zero up to finite-difference
/// round-off (dead ReLU units) from dominating the ratio.
template <typename T>
double max_relative_error(const GradientSet<T>& a, const GradientSet<T>& b, double floor = 1e-2) {
  double worst = 0.0;
  auto visit = [&](const auto& x, const auto& y) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double u = static_cast<double>(x.data()[i]);
      const double v = static_cast<double>(y.data()[i]);
      const double scale = std::max({std::abs(u), std::abs(v), floor});
      worst = std::max(worst, std::abs(u - v) / scale);
    }
  };
  for (std::size_t l = 0; l < a.layer_count(); ++l) {
    visit(a.weight[l], b.weight[l]);
    visit(a.bias[l], b.bias[l]);
  }
  return worst;
}

}  // namespace rdn
