#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "rdn/env/environment.hpp"
#include "rdn/errors.hpp"
#include "rdn/tensor_net/mlp.hpp"
#include "rdn/tensor_net/rng.hpp"

namespace rdn::marl {

/// Shapes shared by every network of a team.
struct TeamLayout {
  int agents = 1;
  int observation_size = 1;  // one frame of local observation
  int stack_depth = 1;
  int action_count = 2;
  int state_size = 0;

  int input_size() const { return observation_size * stack_depth; }
};

/// One joint step. Agent inputs are stored flat (agent-major, each agent's
/// stacked frames oldest first) in single precision; every observation the
/// environments emit is a small integer, so this is lossless. Next-step
/// inputs are dropped for terminal transitions, which never bootstrap.
struct Transition {
  std::vector<float> inputs;
  std::vector<float> state;
  std::vector<int> actions;
  double reward = 0.0;
  std::vector<float> next_inputs;
  std::vector<float> next_state;
  bool terminal = false;
};

/// Fixed-capacity FIFO store with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("training.buffer_capacity must be positive");
    store_.reserve(std::min<std::size_t>(capacity, 4096));
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return store_.size(); }
  bool empty() const { return store_.empty(); }

  void push(Transition t) {
    if (store_.size() < capacity_) {
      store_.push_back(std::move(t));
    } else {
      store_[cursor_] = std::move(t);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  /// Oldest-first position i.
  const Transition& at(std::size_t i) const {
    if (i >= store_.size()) throw UsageError("replay index out of range");
    const std::size_t start = store_.size() < capacity_ ? 0 : cursor_;
    return store_[(start + i) % store_.size()];
  }

  std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const {
    if (store_.empty()) throw UsageError("sampling from an empty replay buffer");
    std::vector<std::size_t> idx(count);
    for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform_int(store_.size()));
    return idx;
  }

  std::vector<const Transition*> sample(std::size_t count, Rng& rng) const {
    std::vector<const Transition*> out;
    out.reserve(count);
    for (auto i : sample_indices(count, rng)) out.push_back(&store_[i]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::vector<Transition> store_;
  std::size_t cursor_ = 0;
};

/// Sliding window of the last k local observations per agent.
class ObservationStack {
 public:
  ObservationStack(const TeamLayout& layout) : layout_(layout) {}

  void reset(const env::JointObservation& obs) {
    frames_.clear();
    for (int k = 0; k < layout_.stack_depth; ++k) frames_.push_back(obs.local);
  }

  void push(const env::JointObservation& obs) {
    frames_.pop_front();
    frames_.push_back(obs.local);
  }

  std::vector<float> flat() const {
    std::vector<float> out;
    out.reserve(static_cast<std::size_t>(layout_.agents * layout_.input_size()));
    for (int i = 0; i < layout_.agents; ++i) {
      for (const auto& frame : frames_) {
        for (double v : frame[static_cast<std::size_t>(i)]) out.push_back(static_cast<float>(v));
      }
    }
    return out;
  }

  template <typename T>
  std::vector<Vector<T>> inputs() const {
    std::vector<Vector<T>> out;
    for (int i = 0; i < layout_.agents; ++i) {
      Vector<T> v(layout_.input_size());
      Eigen::Index k = 0;
      for (const auto& frame : frames_) {
        for (double x : frame[static_cast<std::size_t>(i)]) v(k++) = static_cast<T>(x);
      }
      out.push_back(std::move(v));
    }
    return out;
  }

 private:
  TeamLayout layout_;
  std::deque<std::vector<std::vector<double>>> frames_;
};

inline std::vector<float> to_float(const std::vector<double>& v) { return {v.begin(), v.end()}; }

/// Column-major minibatch assembled from sampled transitions.
template <typename T>
struct Batch {
  std::vector<Matrix<T>> inputs;       // per agent: input_size x B
  std::vector<Matrix<T>> next_inputs;  // zero columns for terminal samples
  Matrix<T> state;                     // state_size x B, empty unless requested
  Matrix<T> next_state;
  std::vector<std::vector<int>> actions;  // [agent][sample]
  RowVector<T> reward;
  RowVector<T> not_done;  // 1 - terminal

  Eigen::Index size() const { return reward.size(); }
  bool any_bootstrap() const { return not_done.size() > 0 && not_done.maxCoeff() > T(0); }
};

template <typename T>
Batch<T> make_batch(const std::vector<const Transition*>& samples, const TeamLayout& layout, bool with_state) {
  if (samples.empty()) throw UsageError("empty training batch");
  const auto n = static_cast<Eigen::Index>(samples.size());
  const int in = layout.input_size();
  Batch<T> b;
  b.inputs.assign(static_cast<std::size_t>(layout.agents), Matrix<T>(in, n));
  b.next_inputs.assign(static_cast<std::size_t>(layout.agents), Matrix<T>::Zero(in, n));
  b.actions.assign(static_cast<std::size_t>(layout.agents), std::vector<int>(static_cast<std::size_t>(n)));
  b.reward.resize(n);
  b.not_done.resize(n);
  if (with_state) {
    b.state.resize(layout.state_size, n);
    b.next_state = Matrix<T>::Zero(layout.state_size, n);
  }
  for (Eigen::Index c = 0; c < n; ++c) {
    const Transition& t = *samples[static_cast<std::size_t>(c)];
    if (static_cast<int>(t.actions.size()) != layout.agents ||
        static_cast<int>(t.inputs.size()) != layout.agents * in) {
      throw ConfigError("transition arity does not match the team layout");
    }
    for (int i = 0; i < layout.agents; ++i) {
      const float* src = t.inputs.data() + static_cast<std::ptrdiff_t>(i) * in;
      for (int k = 0; k < in; ++k) b.inputs[static_cast<std::size_t>(i)](k, c) = static_cast<T>(src[k]);
      if (!t.terminal) {
        const float* nsrc = t.next_inputs.data() + static_cast<std::ptrdiff_t>(i) * in;
        for (int k = 0; k < in; ++k) b.next_inputs[static_cast<std::size_t>(i)](k, c) = static_cast<T>(nsrc[k]);
      }
      b.actions[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = t.actions[static_cast<std::size_t>(i)];
    }
    if (with_state) {
      for (int k = 0; k < layout.state_size; ++k) b.state(k, c) = static_cast<T>(t.state[static_cast<std::size_t>(k)]);
      if (!t.terminal) {
        for (int k = 0; k < layout.state_size; ++k) {
          b.next_state(k, c) = static_cast<T>(t.next_state[static_cast<std::size_t>(k)]);
        }
      }
    }
    b.reward(c) = static_cast<T>(t.reward);
    b.not_done(c) = t.terminal ? T(0) : T(1);
  }
  return b;
}

}  // namespace rdn::marl
