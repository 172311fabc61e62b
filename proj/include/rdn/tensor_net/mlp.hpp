#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rdn/errors.hpp"
#include "rdn/tensor_net/rng.hpp"

namespace rdn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

enum class Activation : std::uint32_t { identity = 0, relu = 1 };

/// One affine layer followed by an elementwise activation.
/// `weight` is fan_out x fan_in.
template <typename T>
struct DenseLayer {
  Matrix<T> weight;
  Vector<T> bias;
  Activation activation = Activation::identity;

  Eigen::Index fan_in() const { return weight.cols(); }
  Eigen::Index fan_out() const { return weight.rows(); }
};

namespace detail {
inline std::uint64_t next_net_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}
}  // namespace detail

/// Post-activation values recorded by a forward pass. Columns are samples;
/// `activations[0]` is the input and `activations[l + 1]` the output of
/// layer l.
template <typename T>
struct ActivationCache {
  std::vector<Matrix<T>> activations;
  std::uint64_t net_id = 0;
  std::uint64_t net_version = 0;

  const Matrix<T>& input() const { return activations.front(); }
  const Matrix<T>& output() const { return activations.back(); }
  Eigen::Index batch_size() const { return activations.empty() ? 0 : activations.front().cols(); }
};

/// Parameter-shaped container for gradients, Adam moments and the like.
template <typename T>
struct GradientSet {
  std::vector<Matrix<T>> weight;
  std::vector<Vector<T>> bias;

  std::size_t layer_count() const { return weight.size(); }

  bool all_zero() const {
    for (std::size_t l = 0; l < weight.size(); ++l) {
      if (!weight[l].isZero(0) || !bias[l].isZero(0)) return false;
    }
    return true;
  }
};

/// Feed-forward network: ReLU hidden layers and an identity output layer.
///
/// Every mutation of the parameters bumps `version()`. Caches remember the
/// id and version of the network that produced them, so a cache that
/// outlived an optimizer step is rejected instead of silently producing
/// wrong gradients or relevance. Copies receive a fresh id.
template <typename T>
class Mlp {
 public:
  using Scalar = T;

  Mlp() : id_(detail::next_net_id()) {}

  explicit Mlp(std::vector<DenseLayer<T>> layers) : layers_(std::move(layers)), id_(detail::next_net_id()) {
    validate();
  }

  Mlp(const Mlp& other) : layers_(other.layers_), id_(detail::next_net_id()), version_(other.version_) {}
  Mlp& operator=(const Mlp& other) {
    if (this != &other) {
      layers_ = other.layers_;
      ++version_;
    }
    return *this;
  }
  Mlp(Mlp&&) noexcept = default;
  Mlp& operator=(Mlp&&) noexcept = default;

  /// Builds a network with layer widths `sizes` = {in, hidden..., out}.
  /// Hidden layers use Kaiming-uniform fan-in scaling, the output layer
  /// uniform(+-1/sqrt(fan_in)); biases start at zero.
  static Mlp make(std::span<const int> sizes, Rng& rng) {
    if (sizes.size() < 2) throw ConfigError("an MLP needs at least an input and an output size");
    for (int s : sizes) {
      if (s <= 0) throw ConfigError("MLP layer sizes must be positive");
    }
    std::vector<DenseLayer<T>> layers;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      const bool output = l + 2 == sizes.size();
      const int fan_in = sizes[l];
      const int fan_out = sizes[l + 1];
      const double bound = output ? 1.0 / std::sqrt(static_cast<double>(fan_in))
                                  : std::sqrt(6.0 / static_cast<double>(fan_in));
      DenseLayer<T> layer;
      layer.weight.resize(fan_out, fan_in);
      for (int r = 0; r < fan_out; ++r) {
        for (int c = 0; c < fan_in; ++c) layer.weight(r, c) = static_cast<T>(rng.uniform(-bound, bound));
      }
      layer.bias = Vector<T>::Zero(fan_out);
      layer.activation = output ? Activation::identity : Activation::relu;
      layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers));
  }

  static Mlp make(std::initializer_list<int> sizes, Rng& rng) {
    const std::vector<int> v(sizes);
    return make(std::span<const int>(v), rng);
  }

  std::size_t layer_count() const { return layers_.size(); }
  Eigen::Index input_size() const { return layers_.empty() ? 0 : layers_.front().fan_in(); }
  Eigen::Index output_size() const { return layers_.empty() ? 0 : layers_.back().fan_out(); }

  const DenseLayer<T>& layer(std::size_t l) const { return layers_.at(l); }
  const std::vector<DenseLayer<T>>& layers() const { return layers_; }

  /// Mutable access; invalidates outstanding caches.
  DenseLayer<T>& mutable_layer(std::size_t l) {
    ++version_;
    return layers_.at(l);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  bool same_architecture(const Mlp& other) const {
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& a = layers_[l];
      const auto& b = other.layers_[l];
      if (a.fan_in() != b.fan_in() || a.fan_out() != b.fan_out() || a.activation != b.activation) return false;
    }
    return true;
  }

  std::uint64_t id() const noexcept { return id_; }
  std::uint64_t version() const noexcept { return version_; }

 private:
  void validate() const {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      if (layer.bias.size() != layer.fan_out()) {
        throw ConfigError("layer " + std::to_string(l) + ": bias length does not match fan_out");
      }
      if (l > 0 && layer.fan_in() != layers_[l - 1].fan_out()) {
        throw ConfigError("layer " + std::to_string(l) + ": fan_in does not match previous fan_out");
      }
    }
  }

  std::vector<DenseLayer<T>> layers_;
  std::uint64_t id_;
  std::uint64_t version_ = 0;
};

namespace detail {

template <typename T>
void check_input(const Mlp<T>& net, Eigen::Index rows) {
  if (net.layer_count() == 0) throw ConfigError("forward on an empty network");
  if (rows != net.input_size()) {
    throw ConfigError("input length " + std::to_string(rows) + " does not match network fan_in " +
                      std::to_string(net.input_size()));
  }
}

template <typename T>
Matrix<T> affine(const DenseLayer<T>& layer, const Matrix<T>& x) {
  Matrix<T> z = layer.weight * x;
  z.colwise() += layer.bias;
  if (layer.activation == Activation::relu) z = z.cwiseMax(T(0));
  return z;
}

}  // namespace detail

/// Batched forward pass; columns of `x` are samples.
template <typename T>
ActivationCache<T> forward(const Mlp<T>& net, const Matrix<T>& x) {
  detail::check_input(net, x.rows());
  ActivationCache<T> cache;
  cache.net_id = net.id();
  cache.net_version = net.version();
  cache.activations.reserve(net.layer_count() + 1);
  cache.activations.push_back(x);
  for (const auto& layer : net.layers()) {
    cache.activations.push_back(detail::affine(layer, cache.activations.back()));
  }
  return cache;
}

/// Single-sample forward pass.
template <typename T>
std::pair<Vector<T>, ActivationCache<T>> forward(const Mlp<T>& net, const Vector<T>& x) {
  ActivationCache<T> cache = forward(net, Matrix<T>(x));
  Vector<T> out = cache.output().col(0);
  return {std::move(out), std::move(cache)};
}

/// Forward pass without retaining intermediate activations.
template <typename T>
Matrix<T> predict(const Mlp<T>& net, const Matrix<T>& x) {
  detail::check_input(net, x.rows());
  Matrix<T> a = x;
  for (const auto& layer : net.layers()) a = detail::affine(layer, a);
  return a;
}

template <typename T>
Vector<T> predict(const Mlp<T>& net, const Vector<T>& x) {
  detail::check_input(net, x.rows());
  Vector<T> a = x;
  for (const auto& layer : net.layers()) {
    Vector<T> z = layer.weight * a + layer.bias;
    if (layer.activation == Activation::relu) z = z.cwiseMax(T(0));
    a = std::move(z);
  }
  return a;
}

template <typename T>
void check_cache(const Mlp<T>& net, const ActivationCache<T>& cache) {
  if (cache.net_id != net.id() || cache.net_version != net.version() ||
      cache.activations.size() != net.layer_count() + 1) {
    throw UsageError("activation cache does not belong to the current state of this network");
  }
}

/// Gradients of a loss whose derivative with respect to the network output
/// is `output_grad` (fan_out x batch). Contributions are summed over the
/// batch columns.
template <typename T>
GradientSet<T> backward(const Mlp<T>& net, const ActivationCache<T>& cache, const Matrix<T>& output_grad) {
  check_cache(net, cache);
  if (output_grad.rows() != net.output_size() || output_grad.cols() != cache.batch_size()) {
    throw UsageError("output gradient shape does not match the cached forward pass");
  }
  const std::size_t n = net.layer_count();
  GradientSet<T> grads;
  grads.weight.resize(n);
  grads.bias.resize(n);
  Matrix<T> delta = output_grad;
  for (std::size_t l = n; l-- > 0;) {
    const auto& layer = net.layer(l);
    if (layer.activation == Activation::relu) {
      delta = delta.cwiseProduct((cache.activations[l + 1].array() > T(0)).template cast<T>().matrix());
    }
    grads.weight[l].noalias() = delta * cache.activations[l].transpose();
    grads.bias[l] = delta.rowwise().sum();
    if (l > 0) delta = layer.weight.transpose() * delta;
  }
  return grads;
}

template <typename T>
GradientSet<T> zero_gradients(const Mlp<T>& net) {
  GradientSet<T> g;
  for (const auto& layer : net.layers()) {
    g.weight.push_back(Matrix<T>::Zero(layer.fan_out(), layer.fan_in()));
    g.bias.push_back(Vector<T>::Zero(layer.fan_out()));
  }
  return g;
}

/// dst <- src. Architectures must match.
template <typename T>
void copy_parameters(const Mlp<T>& src, Mlp<T>& dst) {
  if (&src == &dst) return;
  if (!src.same_architecture(dst)) throw ConfigError("copy_parameters: architecture mismatch");
  for (std::size_t l = 0; l < src.layer_count(); ++l) {
    auto& out = dst.mutable_layer(l);
    out.weight = src.layer(l).weight;
    out.bias = src.layer(l).bias;
  }
}

/// Index of the largest entry; the lowest index wins ties.
template <typename Derived>
Eigen::Index argmax_lowest(const Eigen::MatrixBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

}  // namespace rdn
