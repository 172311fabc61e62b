#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <string>

#include <openssl/evp.h>

#include "json.hpp"
#include "rdn/errors.hpp"
#include "rdn/io/config.hpp"
#include "rdn/io/metrics.hpp"
#include "rdn/version.hpp"

namespace rdn::io {

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

inline std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text(path)); }

/// UTC, second resolution, ISO 8601.
inline std::string utc_timestamp(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunManifest {
  Json config;
  std::uint64_t seed = 0;
  std::string version = kVersion;
  std::string started_at;
  std::string finished_at;
  bool has_final_row = false;
  train::MetricsRow final_row;
  std::string metrics_sha256;
};

inline Json row_to_json(const train::MetricsRow& r) {
  Json j;
  j["episode"] = r.episode;
  for (const auto& name : metric_names()) j[name] = metric_value(r, name);
  return j;
}

inline Json to_json(const RunManifest& m) {
  Json j;
  j["config"] = m.config;
  j["seed"] = m.seed;
  j["version"] = m.version;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["final_metrics"] = m.has_final_row ? row_to_json(m.final_row) : Json(nullptr);
  j["metrics_sha256"] = m.metrics_sha256;
  return j;
}

inline RunManifest manifest_from_json(const Json& j) {
  try {
    RunManifest m;
    m.config = j.at("config");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.version = j.at("version").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    const auto& f = j.at("final_metrics");
    if (!f.is_null()) {
      m.has_final_row = true;
      m.final_row.episode = f.at("episode").get<long>();
      m.final_row.win_rate = f.at("win_rate").get<double>();
      m.final_row.mean_return = f.at("mean_return").get<double>();
      m.final_row.critic_loss = f.at("critic_loss").get<double>();
      m.final_row.agent_loss = f.at("agent_loss").get<double>();
      m.final_row.conservation_residual = f.at("conservation_residual").get<double>();
      m.final_row.epsilon = f.at("epsilon").get<double>();
      m.final_row.essential_mean_abs_rel = f.at("essential_mean_abs_rel").get<double>();
      m.final_row.redundant_mean_abs_rel = f.at("redundant_mean_abs_rel").get<double>();
      m.final_row.wall_ms = f.at("wall_ms").get<double>();
    }
    m.metrics_sha256 = j.at("metrics_sha256").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed manifest: ") + e.what());
  }
}

inline void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  write_text(path, to_json(m).dump(2) + "\n");
}

inline RunManifest read_manifest(const std::filesystem::path& path) {
  auto j = Json::parse(read_text(path), nullptr, false);
  if (j.is_discarded()) throw IoError("'" + path.string() + "' is not valid JSON");
  return manifest_from_json(j);
}

/// True when `metrics_path` still hashes to what the manifest recorded.
inline bool verify_manifest(const RunManifest& m, const std::filesystem::path& metrics_path) {
  return sha256_file(metrics_path) == m.metrics_sha256;
}

}  // namespace rdn::io
