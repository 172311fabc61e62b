#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rdn/errors.hpp"
#include "rdn/tensor_net/mlp.hpp"

namespace rdn::lrp {

/// Assigns each critic-input index to an agent, or to nobody (-1).
class SliceMap {
 public:
  static constexpr int kUnowned = -1;

  SliceMap() = default;
  SliceMap(std::size_t input_size, int agent_count) : owner_(input_size, kUnowned), agents_(agent_count) {
    if (agent_count < 0) throw ConfigError("SliceMap: negative agent count");
  }

  /// Builds from an owner vector; entries are agent ids or -1.
  static SliceMap from_owners(std::vector<int> owners, int agent_count) {
    SliceMap m;
    m.owner_ = std::move(owners);
    m.agents_ = agent_count;
    m.validate();
    return m;
  }

  void assign(std::size_t index, int agent) {
    if (index >= owner_.size()) throw ConfigError("SliceMap: index " + std::to_string(index) + " out of range");
    if (agent < kUnowned || agent >= agents_) throw ConfigError("SliceMap: agent id out of range");
    owner_[index] = agent;
  }

  /// Marks [begin, begin + count) as owned by `agent`.
  void assign_range(std::size_t begin, std::size_t count, int agent) {
    for (std::size_t i = 0; i < count; ++i) assign(begin + i, agent);
  }

  int owner(std::size_t index) const { return owner_.at(index); }
  std::size_t input_size() const { return owner_.size(); }
  int agent_count() const { return agents_; }
  const std::vector<int>& owners() const { return owner_; }

  std::vector<std::size_t> owned_by(int agent) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < owner_.size(); ++i) {
      if (owner_[i] == agent) out.push_back(i);
    }
    return out;
  }

  void validate() const {
    for (std::size_t i = 0; i < owner_.size(); ++i) {
      if (owner_[i] < kUnowned || owner_[i] >= agents_) {
        throw ConfigError("SliceMap: index " + std::to_string(i) + " has an invalid owner");
      }
    }
  }

 private:
  std::vector<int> owner_;
  int agents_ = 0;
};

template <typename T>
struct AgentSums {
  std::vector<T> per_agent;
  T unattributed = T(0);
};

/// Sums input relevance over each agent's slice.
template <typename T, typename Derived>
AgentSums<T> aggregate_per_agent(const Eigen::MatrixBase<Derived>& input_relevance, const SliceMap& slices) {
  if (static_cast<std::size_t>(input_relevance.size()) != slices.input_size()) {
    throw ConfigError("aggregate_per_agent: relevance length " + std::to_string(input_relevance.size()) +
                      " does not match slice map size " + std::to_string(slices.input_size()));
  }
  AgentSums<T> sums;
  sums.per_agent.assign(static_cast<std::size_t>(slices.agent_count()), T(0));
  for (std::size_t j = 0; j < slices.input_size(); ++j) {
    const int who = slices.owner(j);
    const T r = static_cast<T>(input_relevance(static_cast<Eigen::Index>(j)));
    if (who == SliceMap::kUnowned) {
      sums.unattributed += r;
    } else {
      sums.per_agent[static_cast<std::size_t>(who)] += r;
    }
  }
  return sums;
}

}  // namespace rdn::lrp
