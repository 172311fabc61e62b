#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "rdn/errors.hpp"
#include "rdn/train/run_config.hpp"

namespace rdn::io {

inline constexpr const char* kMetricsHeader =
    "episode,win_rate,mean_return,critic_loss,agent_loss,conservation_residual,epsilon,essential_mean_abs_rel,"
    "redundant_mean_abs_rel,wall_ms";

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"win_rate",  "mean_return", "critic_loss", "agent_loss",
                                              "conservation_residual", "epsilon", "essential_mean_abs_rel",
                                              "redundant_mean_abs_rel", "wall_ms"};
  return names;
}

/// 17 significant digits: exact round trip for any double.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw IoError(where + ": bad number '" + s + "'");
  return v;
}

inline double metric_value(const train::MetricsRow& r, const std::string& name) {
  if (name == "episode") return static_cast<double>(r.episode);
  if (name == "win_rate") return r.win_rate;
  if (name == "mean_return") return r.mean_return;
  if (name == "critic_loss") return r.critic_loss;
  if (name == "agent_loss") return r.agent_loss;
  if (name == "conservation_residual") return r.conservation_residual;
  if (name == "epsilon") return r.epsilon;
  if (name == "essential_mean_abs_rel") return r.essential_mean_abs_rel;
  if (name == "redundant_mean_abs_rel") return r.redundant_mean_abs_rel;
  if (name == "wall_ms") return r.wall_ms;
  std::string valid;
  for (const auto& n : metric_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw UsageError("unknown metric '" + name + "' (valid: " + valid + ")");
}

inline std::string metrics_csv(const std::vector<train::MetricsRow>& rows) {
  std::string out = kMetricsHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.episode);
    for (double v : {r.win_rate, r.mean_return, r.critic_loss, r.agent_loss, r.conservation_residual, r.epsilon,
                     r.essential_mean_abs_rel, r.redundant_mean_abs_rel, r.wall_ms}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_metrics(const std::vector<train::MetricsRow>& rows, const std::filesystem::path& path) {
  write_text(path, metrics_csv(rows));
}

inline std::vector<train::MetricsRow> parse_metrics(const std::string& text, const std::string& source = "metrics") {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw IoError(source + ": missing or unexpected header");
  std::vector<train::MetricsRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 10) throw IoError(where + ": expected 10 columns, got " + std::to_string(cells.size()));
    train::MetricsRow r;
    long episode = 0;
    const auto res = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), episode);
    if (res.ec != std::errc() || res.ptr != cells[0].data() + cells[0].size()) {
      throw IoError(where + ": bad episode '" + cells[0] + "'");
    }
    r.episode = episode;
    r.win_rate = parse_double(cells[1], where);
    r.mean_return = parse_double(cells[2], where);
    r.critic_loss = parse_double(cells[3], where);
    r.agent_loss = parse_double(cells[4], where);
    r.conservation_residual = parse_double(cells[5], where);
    r.epsilon = parse_double(cells[6], where);
    r.essential_mean_abs_rel = parse_double(cells[7], where);
    r.redundant_mean_abs_rel = parse_double(cells[8], where);
    r.wall_ms = parse_double(cells[9], where);
    rows.push_back(r);
  }
  return rows;
}

inline std::vector<train::MetricsRow> read_metrics(const std::filesystem::path& path) {
  return parse_metrics(read_text(path), path.string());
}

}  // namespace rdn::io
