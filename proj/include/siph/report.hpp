#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace siph {

inline constexpr const char* kReportVersion = "si-ph-kit/1";

using Json = nlohmann::ordered_json;

enum class ReportFormat { json, csv };

struct CsvRow {
  std::string kind;
  std::string index;
  std::string name;
  std::string value;
  std::string detail;
};

struct Report {
  std::string command;
  Json config = Json::object();
  std::string verdict;
  Json metrics = Json::object();
  Json witnesses = Json::array();
  /// Extra CSV rows (e.g. one per direction for radius sweeps).
  std::vector<CsvRow> rows;
  double wall_time_ms = 0.0;
};

/// Single JSON object, keys in the order version, config, command, verdict,
/// metrics, witnesses, wall_time_ms; newline-terminated.
std::string to_json(const Report& report);
/// Header kind,index,name,value,detail; one row per metric, witness and
/// extra row.
std::string to_csv(const Report& report);

/// Writes to `path` ("-" means `out`). Throws std::runtime_error on I/O failure.
void emit_report(const Report& report, const std::string& path, ReportFormat format, std::ostream& out);

}  // namespace siph
