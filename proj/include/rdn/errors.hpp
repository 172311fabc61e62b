#pragma once

#include <stdexcept>
#include <string>

namespace rdn {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad dimensions, unknown keys, bound violations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// API misuse such as a stale activation cache or a malformed action.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Instance too large for an exhaustive oracle.
class CapacityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Non-finite relevance during propagation; carries the offending unit.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, long unit) : Error(what), unit_(unit) {}
  long unit() const noexcept { return unit_; }

 private:
  long unit_;
};

/// Non-finite gradient or loss during training. `layer` is -1 when the
/// failure is not attributable to one layer.
class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what, int layer = -1) : Error(what), layer_(layer) {}
  int layer() const noexcept { return layer_; }

 private:
  int layer_;
};

}  // namespace rdn
