#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rdn/errors.hpp"
#include "rdn/lrp/relevance.hpp"

namespace rdn::io {

/// One decomposed timestep.
struct RelevanceRecord {
  long episode = 0;
  int t = 0;
  double q_tot = 0.0;
  std::vector<double> per_agent;
  double unattributed = 0.0;
  std::vector<double> bias_absorbed;  // per layer
  double residual = 0.0;

  double total_bias_absorbed() const {
    double s = 0.0;
    for (double b : bias_absorbed) s += b;
    return s;
  }

  bool operator==(const RelevanceRecord&) const = default;
};

template <typename T>
RelevanceRecord make_record(long episode, int t, const lrp::RelevanceReport<T>& rep) {
  RelevanceRecord r;
  r.episode = episode;
  r.t = t;
  r.q_tot = static_cast<double>(rep.q_tot);
  for (T v : rep.per_agent) r.per_agent.push_back(static_cast<double>(v));
  r.unattributed = static_cast<double>(rep.unattributed);
  for (T v : rep.bias_absorbed) r.bias_absorbed.push_back(static_cast<double>(v));
  r.residual = static_cast<double>(rep.conservation_residual);
  return r;
}

inline nlohmann::json to_json(const RelevanceRecord& r) {
  return {{"episode", r.episode},           {"t", r.t},
          {"q_tot", r.q_tot},               {"per_agent", r.per_agent},
          {"unattributed", r.unattributed}, {"bias_absorbed", r.bias_absorbed},
          {"residual", r.residual}};
}

inline RelevanceRecord record_from_json(const nlohmann::json& j) {
  try {
    RelevanceRecord r;
    r.episode = j.at("episode").get<long>();
    r.t = j.at("t").get<int>();
    r.q_tot = j.at("q_tot").get<double>();
    r.per_agent = j.at("per_agent").get<std::vector<double>>();
    r.unattributed = j.at("unattributed").get<double>();
    r.bias_absorbed = j.value("bias_absorbed", std::vector<double>{});
    r.residual = j.at("residual").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed relevance record: ") + e.what());
  }
}

/// JSON lines, one record per line.
inline void write_relevance_trace(const std::vector<RelevanceRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const auto& r : records) out << to_json(r).dump() << '\n';
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

inline std::vector<RelevanceRecord> read_relevance_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::vector<RelevanceRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw IoError(path.string() + ":" + std::to_string(lineno) + ": not valid JSON");
    out.push_back(record_from_json(j));
  }
  return out;
}

}  // namespace rdn::io
