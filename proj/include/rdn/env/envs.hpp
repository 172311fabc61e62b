#pragma once

#include <memory>

#include "rdn/env/environment.hpp"
#include "rdn/env/piano_corridor.hpp"
#include "rdn/env/signal_levers.hpp"

namespace rdn::env {

inline std::unique_ptr<Environment> make_environment(const EnvSpec& spec) {
  if (spec.kind == EnvKind::signal_levers) return std::make_unique<SignalLevers>(spec);
  return std::make_unique<PianoCorridor>(spec);
}

/// Fresh environment from `spec`, reset with `rng`.
inline JointObservation reset(const EnvSpec& spec, Rng& rng) { return make_environment(spec)->reset(rng); }

}  // namespace rdn::env
