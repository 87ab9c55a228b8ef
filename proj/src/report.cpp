#include "siph/report.hpp"

#include <fstream>
#include <ostream>
#include <stdexcept>

namespace siph {

std::string to_json(const Report& report) {
  Json j;
  j["version"] = kReportVersion;
  j["config"] = report.config;
  j["command"] = report.command;
  j["verdict"] = report.verdict;
  j["metrics"] = report.metrics;
  j["witnesses"] = report.witnesses;
  j["wall_time_ms"] = report.wall_time_ms;
  return j.dump(2) + "\n";
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string scalar_text(const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

void append(std::string& out, const CsvRow& r) {
  out += csv_field(r.kind) + ',' + csv_field(r.index) + ',' + csv_field(r.name) + ',' +
         csv_field(r.value) + ',' + csv_field(r.detail) + '\n';
}

}  // namespace

std::string to_csv(const Report& report) {
  std::string out = "kind,index,name,value,detail\n";
  append(out, {"meta", "", "version", kReportVersion, ""});
  append(out, {"meta", "", "command", report.command, ""});
  append(out, {"meta", "", "verdict", report.verdict, ""});
  append(out, {"meta", "", "config", "", report.config.dump()});
  for (const auto& [key, value] : report.metrics.items()) {
    if (value.is_structured()) {
      append(out, {"metric", "", key, "", value.dump()});
    } else {
      append(out, {"metric", "", key, scalar_text(value), ""});
    }
  }
  std::size_t i = 0;
  for (const auto& w : report.witnesses) {
    const std::string name = w.contains("kind") ? scalar_text(w["kind"]) : "witness";
    append(out, {"witness", std::to_string(i++), name, "", w.dump()});
  }
  for (const auto& r : report.rows) append(out, r);
  append(out, {"meta", "", "wall_time_ms", Json(report.wall_time_ms).dump(), ""});
  return out;
}

void emit_report(const Report& report, const std::string& path, ReportFormat format, std::ostream& out) {
  const std::string text = format == ReportFormat::json ? to_json(report) : to_csv(report);
  if (path == "-") {
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("failed to write report to standard output");
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
  file << text;
  file.close();
  if (!file) throw std::runtime_error("failed to write '" + path + "'");
}

}  // namespace siph
