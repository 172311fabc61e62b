#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "rdn/env/oracle.hpp"
#include "rdn/errors.hpp"
#include "rdn/io/config.hpp"
#include "rdn/io/manifest.hpp"
#include "rdn/io/metrics.hpp"
#include "rdn/tensor_net/snapshot.hpp"
#include "rdn/train/trainer.hpp"

namespace rdn::io {

// Run directory layout:
//   <dir>/config.json     normalized config
//   <dir>/metrics.csv
//   <dir>/manifest.json
//   <dir>/snapshots/agent_<i>.bin, snapshots/critic.bin (RDN only)

inline std::filesystem::path snapshot_dir(const std::filesystem::path& run_dir) { return run_dir / "snapshots"; }

inline std::filesystem::path agent_snapshot(const std::filesystem::path& run_dir, int agent) {
  return snapshot_dir(run_dir) / ("agent_" + std::to_string(agent) + ".bin");
}

inline std::filesystem::path critic_snapshot(const std::filesystem::path& run_dir) {
  return snapshot_dir(run_dir) / "critic.bin";
}

template <typename T>
void save_strategy(const marl::Strategy<T>& strategy, const std::filesystem::path& run_dir) {
  std::filesystem::create_directories(snapshot_dir(run_dir));
  for (int i = 0; i < strategy.agents().agent_count(); ++i) save_snapshot(strategy.agents().net(i), agent_snapshot(run_dir, i));
  if (const auto* critic = strategy.critic()) save_snapshot(critic->online(), critic_snapshot(run_dir));
}

inline void save_strategy(const train::RunOutput& out, const std::filesystem::path& run_dir) {
  std::visit([&](const auto& s) { save_strategy(*s, run_dir); }, out.strategy);
}

/// Fresh strategy for `config` with the online networks replaced by the
/// snapshots in `run_dir`. Shape mismatches raise ConfigError.
template <typename T>
std::unique_ptr<marl::Strategy<T>> load_strategy(const train::RunConfig& config, const std::filesystem::path& run_dir) {
  auto strategy = train::make_run_strategy<T>(config, Rng(config.seed));
  auto& bank = strategy->agents();
  for (int i = 0; i < bank.agent_count(); ++i) {
    const auto path = agent_snapshot(run_dir, i);
    if (!std::filesystem::exists(path)) throw ConfigError("missing snapshot '" + path.string() + "'");
    copy_parameters(load_snapshot<T>(path), bank.net(i));
  }
  if (auto* critic = strategy->critic()) {
    const auto path = critic_snapshot(run_dir);
    if (std::filesystem::exists(path)) {
      copy_parameters(load_snapshot<T>(path), critic->online());
      critic->sync();
    }
  }
  return strategy;
}

struct RunRecord {
  std::filesystem::path dir;
  std::string metrics_sha256;
};

/// Writes config, metrics, manifest and (if enabled) snapshots for one run.
inline RunRecord write_run_directory(const std::filesystem::path& dir, const train::RunConfig& config,
                                     const std::vector<train::MetricsRow>& rows, const train::RunOutput* output,
                                     std::chrono::system_clock::time_point started,
                                     std::chrono::system_clock::time_point finished) {
  std::filesystem::create_directories(dir);
  const Json cfg = to_json(config);
  write_text(dir / "config.json", cfg.dump(2) + "\n");
  const std::string csv = metrics_csv(rows);
  write_text(dir / "metrics.csv", csv);
  if (output != nullptr && config.snapshots) save_strategy(*output, dir);

  RunManifest m;
  m.config = cfg;
  m.seed = config.seed;
  m.started_at = utc_timestamp(started);
  m.finished_at = utc_timestamp(finished);
  m.has_final_row = !rows.empty();
  if (m.has_final_row) m.final_row = rows.back();
  m.metrics_sha256 = sha256_hex(csv);
  write_manifest(m, dir / "manifest.json");
  return {dir, m.metrics_sha256};
}

inline Json env_spec_json(const env::EnvSpec& spec) {
  return {{"kind", env::to_string(spec.kind)},
          {"n_essential", spec.n_essential},
          {"n_redundant", spec.n_redundant},
          {"levers", spec.levers},
          {"corridor_length", spec.corridor_length},
          {"horizon", spec.horizon}};
}

inline Json oracle_json(const env::EnvSpec& spec, const env::OracleResult& r) {
  Json policy = Json::array();
  for (const auto& p : r.policy) {
    policy.push_back({{"situation", p.situation}, {"joint_actions", p.joint_actions}, {"value", p.value}});
  }
  return {{"spec", env_spec_json(spec)}, {"optimal_value", r.optimal_value}, {"sweeps", r.sweeps}, {"policy", policy}};
}

}  // namespace rdn::io
