#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "rdn/errors.hpp"
#include "rdn/train/run_config.hpp"

namespace rdn::io {

using Json = nlohmann::json;

namespace detail {

inline std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

inline void reject_unknown(const Json& obj, const std::string& path, const std::set<std::string>& known) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) throw ConfigError("unknown key '" + join(path, key) + "'");
  }
}

inline const Json& require_object(const Json& v, const std::string& path) {
  if (!v.is_object()) throw ConfigError(path + ": expected an object");
  return v;
}

inline void read(const Json& obj, const std::string& path, const char* key, int& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  const auto name = join(path, key);
  if (!v.is_number_integer()) throw ConfigError(name + ": expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ConfigError(name + ": integer out of range");
  }
  out = static_cast<int>(x);
}

inline void read(const Json& obj, const std::string& path, const char* key, std::uint64_t& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned()) throw ConfigError(join(path, key) + ": expected a non-negative integer");
  out = v.get<std::uint64_t>();
}

inline void read(const Json& obj, const std::string& path, const char* key, double& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(join(path, key) + ": expected a number");
  out = v.get<double>();
  if (!std::isfinite(out)) throw ConfigError(join(path, key) + ": expected a finite number");
}

inline void read(const Json& obj, const std::string& path, const char* key, bool& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(join(path, key) + ": expected true or false");
  out = v.get<bool>();
}

inline void read(const Json& obj, const std::string& path, const char* key, std::string& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(join(path, key) + ": expected a string");
  out = v.get<std::string>();
}

inline void read(const Json& obj, const std::string& path, const char* key, std::vector<int>& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  const auto name = join(path, key);
  if (!v.is_array()) throw ConfigError(name + ": expected an array of integers");
  std::vector<int> tmp;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number_integer()) throw ConfigError(name + "[" + std::to_string(i) + "]: expected an integer");
    tmp.push_back(v[i].get<int>());
  }
  out = std::move(tmp);
}

/// Runs `parse` and prefixes any ConfigError it raises with `path`.
template <typename F>
auto with_path(const std::string& path, F&& parse) {
  try {
    return parse();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace detail

/// RunConfig as a fully populated JSON document (every field explicit).
inline Json to_json(const train::RunConfig& c) {
  Json j;
  j["env"] = {{"kind", env::to_string(c.env.kind)},
              {"n_essential", c.env.n_essential},
              {"n_redundant", c.env.n_redundant},
              {"levers", c.env.levers},
              {"corridor_length", c.env.corridor_length},
              {"horizon", c.env.horizon}};
  j["strategy"] = {{"kind", marl::to_string(c.strategy)},
                   {"critic_input", marl::to_string(c.critic_input)},
                   {"decompose_target", c.decompose_target},
                   {"target_sync", c.target_sync},
                   {"stack_depth", c.stack_depth},
                   {"agent_hidden", c.agent_hidden},
                   {"critic_hidden", c.critic_hidden}};
  j["lrp"] = {{"rule", lrp::to_string(c.lrp.kind)},
              {"epsilon", c.lrp.epsilon},
              {"alpha", c.lrp.alpha},
              {"beta", c.lrp.beta}};
  j["training"] = {{"gamma", c.gamma},
                   {"eps_start", c.epsilon.start},
                   {"eps_end", c.epsilon.end},
                   {"eps_decay_episodes", c.epsilon.decay_episodes},
                   {"optimizer", c.optimizer == OptimizerKind::adam ? "adam" : "sgd"},
                   {"agent_lr", c.agent_lr},
                   {"critic_lr", c.critic_lr},
                   {"batch_size", c.batch_size},
                   {"buffer_capacity", c.buffer_capacity},
                   {"warmup", c.warmup},
                   {"episodes", c.episodes},
                   {"eval_interval", c.eval_interval},
                   {"eval_episodes", c.eval_episodes},
                   {"seed", c.seed},
                   {"scalar", train::to_string(c.scalar)}};
  j["io"] = {{"snapshots", c.snapshots}, {"wall_clock", c.wall_clock}};
  return j;
}

/// Parses a config document on top of the defaults and validates it.
/// Either the whole document applies or a ConfigError naming the offending
/// path is thrown.
inline train::RunConfig from_json(const Json& doc) {
  using detail::read;
  detail::require_object(doc, "config");
  detail::reject_unknown(doc, "", {"env", "strategy", "lrp", "training", "io"});
  train::RunConfig c;

  if (doc.contains("env")) {
    const auto& e = detail::require_object(doc.at("env"), "env");
    detail::reject_unknown(e, "env", {"kind", "n_essential", "n_redundant", "levers", "corridor_length", "horizon"});
    std::string kind = env::to_string(c.env.kind);
    read(e, "env", "kind", kind);
    c.env.kind = detail::with_path("env.kind", [&] { return env::parse_env_kind(kind); });
    read(e, "env", "n_essential", c.env.n_essential);
    read(e, "env", "n_redundant", c.env.n_redundant);
    read(e, "env", "levers", c.env.levers);
    read(e, "env", "corridor_length", c.env.corridor_length);
    read(e, "env", "horizon", c.env.horizon);
  }

  if (doc.contains("strategy")) {
    const auto& s = doc.at("strategy");
    std::string kind = marl::to_string(c.strategy);
    if (s.is_string()) {
      kind = s.get<std::string>();
    } else {
      detail::require_object(s, "strategy");
      detail::reject_unknown(s, "strategy",
                             {"kind", "critic_input", "decompose_target", "target_sync", "stack_depth", "agent_hidden",
                              "critic_hidden"});
      read(s, "strategy", "kind", kind);
      std::string mode = marl::to_string(c.critic_input);
      read(s, "strategy", "critic_input", mode);
      c.critic_input = detail::with_path("strategy.critic_input", [&] { return marl::parse_critic_input(mode); });
      read(s, "strategy", "decompose_target", c.decompose_target);
      read(s, "strategy", "target_sync", c.target_sync);
      read(s, "strategy", "stack_depth", c.stack_depth);
      read(s, "strategy", "agent_hidden", c.agent_hidden);
      read(s, "strategy", "critic_hidden", c.critic_hidden);
    }
    c.strategy = detail::with_path("strategy.kind", [&] { return marl::parse_strategy(kind); });
  }

  if (doc.contains("lrp")) {
    const auto& l = detail::require_object(doc.at("lrp"), "lrp");
    detail::reject_unknown(l, "lrp", {"rule", "epsilon", "alpha", "beta"});
    std::string rule = lrp::to_string(c.lrp.kind);
    read(l, "lrp", "rule", rule);
    c.lrp.kind = detail::with_path("lrp.rule", [&] { return lrp::parse_rule_kind(rule); });
    read(l, "lrp", "epsilon", c.lrp.epsilon);
    read(l, "lrp", "alpha", c.lrp.alpha);
    read(l, "lrp", "beta", c.lrp.beta);
  }

  if (doc.contains("training")) {
    const auto& t = detail::require_object(doc.at("training"), "training");
    detail::reject_unknown(t, "training",
                           {"gamma", "eps_start", "eps_end", "eps_decay_episodes", "optimizer", "agent_lr", "critic_lr",
                            "batch_size", "buffer_capacity", "warmup", "episodes", "eval_interval", "eval_episodes",
                            "seed", "scalar"});
    read(t, "training", "gamma", c.gamma);
    read(t, "training", "eps_start", c.epsilon.start);
    read(t, "training", "eps_end", c.epsilon.end);
    read(t, "training", "eps_decay_episodes", c.epsilon.decay_episodes);
    std::string opt = c.optimizer == OptimizerKind::adam ? "adam" : "sgd";
    read(t, "training", "optimizer", opt);
    if (opt == "adam") {
      c.optimizer = OptimizerKind::adam;
    } else if (opt == "sgd") {
      c.optimizer = OptimizerKind::sgd;
    } else {
      throw ConfigError("training.optimizer: unknown optimizer '" + opt + "' (expected adam or sgd)");
    }
    read(t, "training", "agent_lr", c.agent_lr);
    read(t, "training", "critic_lr", c.critic_lr);
    read(t, "training", "batch_size", c.batch_size);
    read(t, "training", "buffer_capacity", c.buffer_capacity);
    read(t, "training", "warmup", c.warmup);
    read(t, "training", "episodes", c.episodes);
    read(t, "training", "eval_interval", c.eval_interval);
    read(t, "training", "eval_episodes", c.eval_episodes);
    read(t, "training", "seed", c.seed);
    std::string scalar = train::to_string(c.scalar);
    read(t, "training", "scalar", scalar);
    c.scalar = detail::with_path("training.scalar", [&] { return train::parse_scalar_width(scalar); });
  }

  if (doc.contains("io")) {
    const auto& o = detail::require_object(doc.at("io"), "io");
    detail::reject_unknown(o, "io", {"snapshots", "wall_clock"});
    read(o, "io", "snapshots", c.snapshots);
    read(o, "io", "wall_clock", c.wall_clock);
  }

  c.validate();
  return c;
}

inline Json normalize(const Json& doc) { return to_json(from_json(doc)); }

/// Applies one dotted-path override "a.b=value". The value is read as JSON
/// when it parses (numbers, booleans, arrays, quoted strings) and as a bare
/// string otherwise. A string-valued section is widened to {"kind": ...}
/// before descending into it.
inline void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    parts.push_back(path.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  Json* node = &doc;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (parts[i].empty()) throw ConfigError("override '" + assignment + "' has an empty path segment");
    Json& child = (*node)[parts[i]];
    if (child.is_null()) child = Json::object();
    if (child.is_string()) child = Json{{"kind", child.get<std::string>()}};
    if (!child.is_object()) throw ConfigError("override path '" + path + "' descends into a non-object");
    node = &child;
  }
  if (parts.back().empty()) throw ConfigError("override '" + assignment + "' has an empty path segment");
  (*node)[parts.back()] = std::move(value);
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  Json doc = Json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config file '" + path.string() + "' is not valid JSON");
  return doc;
}

/// File values first, then overrides in order, then defaults and validation.
inline train::RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
  Json doc = read_json_file(path);
  if (!doc.is_object()) throw ConfigError("config file '" + path.string() + "' must hold a JSON object");
  for (const auto& o : overrides) apply_override(doc, o);
  return from_json(doc);
}

}  // namespace rdn::io
