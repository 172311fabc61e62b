#pragma once

#include <cmath>
#include <string>

#include "rdn/errors.hpp"

namespace rdn::lrp {

enum class RuleKind { epsilon, alphabeta };

/// Propagation rule. The epsilon rule is the default (epsilon = 1e-6);
/// alpha-beta requires alpha - beta == 1 and alpha >= 1.
struct LrpRule {
  RuleKind kind = RuleKind::epsilon;
  double epsilon = 1e-6;
  double alpha = 1.0;
  double beta = 0.0;

  static LrpRule epsilon_rule(double eps) { return LrpRule{RuleKind::epsilon, eps, 1.0, 0.0}; }
  static LrpRule alpha_beta(double alpha, double beta) { return LrpRule{RuleKind::alphabeta, 0.0, alpha, beta}; }

  void validate() const {
    if (kind == RuleKind::epsilon) {
      if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("lrp.epsilon must be a finite value >= 0");
    } else {
      if (!(alpha >= 1.0)) throw ConfigError("lrp.alpha must be >= 1");
      if (std::abs((alpha - beta) - 1.0) > 1e-12) throw ConfigError("lrp.alpha - lrp.beta must equal 1");
    }
  }

  bool operator==(const LrpRule&) const = default;
};

inline std::string to_string(RuleKind k) { return k == RuleKind::epsilon ? "epsilon" : "alphabeta"; }

inline RuleKind parse_rule_kind(const std::string& s) {
  if (s == "epsilon") return RuleKind::epsilon;
  if (s == "alphabeta") return RuleKind::alphabeta;
  throw ConfigError("unknown LRP rule '" + s + "' (expected epsilon or alphabeta)");
}

}  // namespace rdn::lrp
