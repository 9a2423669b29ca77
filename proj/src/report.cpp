#include "bidrank/report.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "bidrank/errors.hpp"

namespace bidrank {

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::recorded: return "recorded";
  }
  return "recorded";
}

bool RunReport::all_pass() const {
  for (const auto& row : rows)
    if (row.verdict == Verdict::fail) return false;
  return true;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

nlohmann::ordered_json report_payload(const RunReport& report) {
  nlohmann::ordered_json doc;
  doc["scenario"] = report.scenario_id;
  doc["kind"] = report.kind;
  doc["seed"] = report.seed;
  doc["version"] = report.version;
  doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json r;
    r["metric"] = row.metric;
    r["value"] = row.value;
    if (row.std_error) r["std_error"] = *row.std_error;
    if (row.bound) r["bound"] = *row.bound;
    r["verdict"] = verdict_name(row.verdict);
    if (!row.invariant.empty()) r["invariant"] = row.invariant;
    doc["rows"].push_back(std::move(r));
  }
  if (!report.curve.empty()) {
    doc["curve"] = nlohmann::ordered_json::array();
    for (const auto& pt : report.curve)
      doc["curve"].push_back({{"x", pt.x}, {"y", pt.y}, {"y_bound", pt.y_bound}});
  }
  if (!report.extras.is_null()) doc["extras"] = report.extras;
  return doc;
}

nlohmann::ordered_json report_document(const RunReport& report) {
  nlohmann::ordered_json doc = report_payload(report);
  doc["diagnostics"] = {{"wall_ms", report.wall_ms}};
  return doc;
}

std::string report_csv(const RunReport& report) {
  std::string out;
  if (!report.curve.empty()) {
    out += "x,y,y_bound\n";
    for (const auto& pt : report.curve)
      out += format_double(pt.x) + "," + format_double(pt.y) + "," +
             format_double(pt.y_bound) + "\n";
    return out;
  }
  out += "metric,value,std_error,bound,verdict\n";
  for (const auto& row : report.rows) {
    out += row.metric + "," + format_double(row.value) + ",";
    if (row.std_error) out += format_double(*row.std_error);
    out += ",";
    if (row.bound) out += format_double(*row.bound);
    out += "," + verdict_name(row.verdict) + "\n";
  }
  return out;
}

namespace {

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    if (!out) throw ValidationError("short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw ValidationError("cannot rename '" + tmp.string() + "' to '" + path + "'");
}

}  // namespace

void write_report_json(const RunReport& report, const std::string& path) {
  atomic_write(path, report_document(report).dump(2) + "\n");
}

void write_report_csv(const RunReport& report, const std::string& path) {
  atomic_write(path, report_csv(report));
}

}  // namespace bidrank
