#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace itolat {

/// One verification outcome. `t` is the time parameter when the check is
/// time-indexed (NaN otherwise); `wall_ms` is informational and kept out of
/// the CSV so runs with one seed are byte-identical.
struct CheckReport {
  std::string check;
  double t = std::nan("");
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  double wall_ms = 0.0;
};

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string reports_to_csv(const std::vector<CheckReport>& reports) {
  std::string out = "check_name,t,lhs,rhs,residual,tolerance,pass\n";
  for (const CheckReport& r : reports) {
    out += r.check;
    out += ',';
    if (!std::isnan(r.t)) out += format_number(r.t);
    out += ',';
    out += format_number(r.lhs);
    out += ',';
    out += format_number(r.rhs);
    out += ',';
    out += format_number(r.residual);
    out += ',';
    out += format_number(r.tolerance);
    out += ',';
    out += r.pass ? '1' : '0';
    out += '\n';
  }
  return out;
}

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline nlohmann::json reports_to_json(const std::vector<CheckReport>& reports,
                                      const nlohmann::json& meta) {
  nlohmann::json rows = nlohmann::json::array();
  for (const CheckReport& r : reports) {
    nlohmann::json row{{"check", r.check},
                       {"lhs", r.lhs},
                       {"rhs", r.rhs},
                       {"residual", r.residual},
                       {"tolerance", r.tolerance},
                       {"pass", r.pass},
                       {"wall_ms", r.wall_ms}};
    if (!std::isnan(r.t)) row["t"] = r.t;
    rows.push_back(std::move(row));
  }
  return nlohmann::json{{"meta", meta},
                        {"digest", fnv1a_hex(reports_to_csv(reports))},
                        {"results", std::move(rows)}};
}

}  // namespace itolat
