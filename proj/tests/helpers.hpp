#pragma once

#include <initializer_list>
#include <vector>

#include "rdn/tensor_net/mlp.hpp"

namespace rdn::testing {

inline Matrix<double> mat(std::initializer_list<std::initializer_list<double>> rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.begin()->size());
  Matrix<double> m(r, c);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline Vector<double> vec(std::initializer_list<double> v) {
  Vector<double> out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline DenseLayer<double> layer(Matrix<double> w, Vector<double> b, Activation act) {
  return DenseLayer<double>{std::move(w), std::move(b), act};
}

/// W1 = I (2x2), ReLU; W2 = [[1, 1]], identity; zero biases.
inline Mlp<double> relu_sum_net() {
  return Mlp<double>({layer(mat({{1, 0}, {0, 1}}), vec({0, 0}), Activation::relu),
                      layer(mat({{1, 1}}), vec({0}), Activation::identity)});
}

inline Matrix<double> random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo = -1.0, double hi = 1.0) {
  Matrix<double> m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(lo, hi);
  }
  return m;
}

inline void randomize_biases(Mlp<double>& net, Rng& rng) {
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    auto& b = net.mutable_layer(l).bias;
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = rng.uniform(-0.5, 0.5);
  }
}

}  // namespace rdn::testing
