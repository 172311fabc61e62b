#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rdn/errors.hpp"
#include "rdn/lrp/rule.hpp"
#include "rdn/lrp/slice_map.hpp"
#include "rdn/tensor_net/mlp.hpp"

namespace rdn::lrp {

/// Relevance redistributed through one layer, per sample (columns).
template <typename T>
struct LayerRelevance {
  Matrix<T> lower;               // fan_in x batch
  RowVector<T> bias_absorbed;    // 1 x batch
};

/// Decomposition of one scalar critic output.
///
/// conservation_residual = seed - (sum(per_agent) + unattributed + sum(bias_absorbed)).
/// When no slice map has been applied, per_agent is empty and unattributed
/// holds the whole input relevance.
template <typename T>
struct RelevanceReport {
  Vector<T> input_relevance;
  std::vector<T> per_agent;
  T unattributed = T(0);
  std::vector<T> bias_absorbed;  // one entry per layer
  T q_tot = T(0);
  T seed = T(0);
  T conservation_residual = T(0);

  T total_bias_absorbed() const {
    T s = T(0);
    for (T b : bias_absorbed) s += b;
    return s;
  }
};

/// Input relevance for every column of a batched forward pass.
template <typename T>
struct BatchRelevance {
  Matrix<T> input;          // input_size x batch
  Matrix<T> bias_absorbed;  // layer_count x batch
  RowVector<T> q_tot;
  RowVector<T> seed;

  Eigen::Index batch_size() const { return input.cols(); }
};

namespace detail {

template <typename T>
[[noreturn]] void throw_zero_denominator(Eigen::Index unit) {
  throw NumericalError("LRP denominator vanished at unit " + std::to_string(unit) +
                           " (z == 0 with epsilon == 0); relevance is not finite",
                       static_cast<long>(unit));
}

/// Shared implementation of the per-layer rules. `denominator_skew` scales
/// every denominator by (1 + skew) (negative control for the invariant suite).
template <typename T>
LayerRelevance<T> propagate(const Matrix<T>& lower, const Matrix<T>& weight, const Vector<T>& bias,
                            const Matrix<T>& upper_relevance, const LrpRule& rule, T denominator_skew = T(0)) {
  if (lower.rows() != weight.cols() || bias.size() != weight.rows() || upper_relevance.rows() != weight.rows() ||
      upper_relevance.cols() != lower.cols()) {
    throw ConfigError("lrp_layer: dimension mismatch");
  }
  LayerRelevance<T> out;
  if (rule.kind == RuleKind::epsilon) {
    const T eps = static_cast<T>(rule.epsilon);
    Matrix<T> z = weight * lower;
    z.colwise() += bias;
    Matrix<T> denom = z.unaryExpr([eps](T v) { return v >= T(0) ? v + eps : v - eps; });
    if (denominator_skew != T(0)) denom *= (T(1) + denominator_skew);
    for (Eigen::Index c = 0; c < denom.cols(); ++c) {
      for (Eigen::Index k = 0; k < denom.rows(); ++k) {
        if (denom(k, c) == T(0)) throw_zero_denominator<T>(k);
      }
    }
    const Matrix<T> s = upper_relevance.cwiseQuotient(denom);
    out.lower = lower.cwiseProduct(weight.transpose() * s);
    out.bias_absorbed = bias.transpose() * s;
  } else {
    const T alpha = static_cast<T>(rule.alpha);
    const T beta = static_cast<T>(rule.beta);
    const Matrix<T> wp = weight.cwiseMax(T(0));
    const Matrix<T> wn = weight.cwiseMin(T(0));
    const Matrix<T> ap = lower.cwiseMax(T(0));
    const Matrix<T> an = lower.cwiseMin(T(0));
    const Vector<T> bp = bias.cwiseMax(T(0));
    const Vector<T> bn = bias.cwiseMin(T(0));
    Matrix<T> zp = wp * ap + wn * an;
    Matrix<T> zn = wp * an + wn * ap;
    zp.colwise() += bp;
    zn.colwise() += bn;
    if (denominator_skew != T(0)) {
      zp *= (T(1) + denominator_skew);
      zn *= (T(1) + denominator_skew);
    }
    // An empty pool passes no relevance; what it would have carried shows up
    // in the conservation residual.
    Matrix<T> sp = Matrix<T>::Zero(zp.rows(), zp.cols());
    Matrix<T> sn = Matrix<T>::Zero(zn.rows(), zn.cols());
    for (Eigen::Index c = 0; c < zp.cols(); ++c) {
      for (Eigen::Index k = 0; k < zp.rows(); ++k) {
        if (zp(k, c) != T(0)) sp(k, c) = alpha * upper_relevance(k, c) / zp(k, c);
        if (zn(k, c) != T(0)) sn(k, c) = beta * upper_relevance(k, c) / zn(k, c);
      }
    }
    out.lower = ap.cwiseProduct(wp.transpose() * sp) + an.cwiseProduct(wn.transpose() * sp) -
                an.cwiseProduct(wp.transpose() * sn) - ap.cwiseProduct(wn.transpose() * sn);
    out.bias_absorbed = bp.transpose() * sp - bn.transpose() * sn;
  }
  if (!out.lower.allFinite()) {
    for (Eigen::Index k = 0; k < out.lower.rows(); ++k) {
      if (!out.lower.row(k).allFinite()) {
        throw NumericalError("LRP produced non-finite relevance at input unit " + std::to_string(k), k);
      }
    }
  }
  return out;
}

}  // namespace detail

/// Redistributes `upper_relevance` (one column per sample) onto the layer's
/// inputs `lower` through weights W and biases b.
template <typename T>
LayerRelevance<T> lrp_layer(const Matrix<T>& lower, const Matrix<T>& weight, const Vector<T>& bias,
                            const Matrix<T>& upper_relevance, const LrpRule& rule) {
  rule.validate();
  return detail::propagate(lower, weight, bias, upper_relevance, rule);
}

/// Single-sample convenience overload; returns (R_lower, bias_absorbed).
template <typename T>
std::pair<Vector<T>, T> lrp_layer(const Vector<T>& lower, const Matrix<T>& weight, const Vector<T>& bias,
                                  const Vector<T>& upper_relevance, const LrpRule& rule) {
  auto r = lrp_layer(Matrix<T>(lower), weight, bias, Matrix<T>(upper_relevance), rule);
  return {Vector<T>(r.lower.col(0)), r.bias_absorbed(0)};
}

namespace detail {

template <typename T>
BatchRelevance<T> backward_relevance(const Mlp<T>& net, const ActivationCache<T>& cache, const LrpRule& rule,
                                     const RowVector<T>* seeds, T denominator_skew) {
  check_cache(net, cache);
  if (net.output_size() != 1) throw UsageError("LRP requires a scalar-output network");
  const Eigen::Index batch = cache.batch_size();
  BatchRelevance<T> out;
  out.q_tot = cache.output().row(0);
  if (seeds != nullptr) {
    if (seeds->size() != batch) throw UsageError("LRP seed count does not match the batch");
    out.seed = *seeds;
  } else {
    out.seed = out.q_tot;
  }
  out.bias_absorbed = Matrix<T>::Zero(static_cast<Eigen::Index>(net.layer_count()), batch);
  Matrix<T> relevance = out.seed;
  for (std::size_t l = net.layer_count(); l-- > 0;) {
    const auto& layer = net.layer(l);
    auto step = propagate(cache.activations[l], layer.weight, layer.bias, relevance, rule, denominator_skew);
    out.bias_absorbed.row(static_cast<Eigen::Index>(l)) = step.bias_absorbed;
    relevance = std::move(step.lower);
  }
  out.input = std::move(relevance);
  return out;
}

}  // namespace detail

/// Propagates each sample's scalar output back to the inputs. By default the
/// output is seeded with its own value (Q_tot); `seeds` overrides that per
/// sample.
template <typename T>
BatchRelevance<T> lrp_backward_batch(const Mlp<T>& net, const ActivationCache<T>& cache, const LrpRule& rule,
                                     const RowVector<T>* seeds = nullptr) {
  rule.validate();
  return detail::backward_relevance(net, cache, rule, seeds, T(0));
}

/// Builds the report for column `col`. With a slice map the input relevance
/// is split per agent; without one it is all reported as unattributed.
template <typename T>
RelevanceReport<T> make_report(const BatchRelevance<T>& batch, Eigen::Index col, const SliceMap* slices = nullptr) {
  RelevanceReport<T> rep;
  rep.input_relevance = batch.input.col(col);
  rep.q_tot = batch.q_tot(col);
  rep.seed = batch.seed(col);
  rep.bias_absorbed.resize(static_cast<std::size_t>(batch.bias_absorbed.rows()));
  for (Eigen::Index l = 0; l < batch.bias_absorbed.rows(); ++l) {
    rep.bias_absorbed[static_cast<std::size_t>(l)] = batch.bias_absorbed(l, col);
  }
  T distributed = rep.total_bias_absorbed();
  if (slices != nullptr) {
    auto sums = aggregate_per_agent<T>(rep.input_relevance, *slices);
    rep.per_agent = std::move(sums.per_agent);
    rep.unattributed = sums.unattributed;
    for (T v : rep.per_agent) distributed += v;
    distributed += rep.unattributed;
  } else {
    rep.unattributed = rep.input_relevance.sum();
    distributed += rep.unattributed;
  }
  rep.conservation_residual = rep.seed - distributed;
  return rep;
}

/// Single-sample decomposition of a scalar-output network.
template <typename T>
RelevanceReport<T> lrp_backward(const Mlp<T>& net, const ActivationCache<T>& cache, const LrpRule& rule,
                                const SliceMap* slices = nullptr, std::optional<T> seed = std::nullopt) {
  if (cache.batch_size() != 1) throw UsageError("lrp_backward expects a single-sample cache");
  RowVector<T> s(1);
  if (seed) s(0) = *seed;
  auto batch = lrp_backward_batch(net, cache, rule, seed ? &s : nullptr);
  return make_report(batch, 0, slices);
}

}  // namespace rdn::lrp
