#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace bidrank {

inline constexpr const char* kArtifactVersion = "0.1.0";

enum class Verdict { pass, fail, recorded };

std::string verdict_name(Verdict v);

struct MetricRow {
  std::string metric;
  double value = 0.0;
  std::optional<double> std_error;
  std::optional<double> bound;
  Verdict verdict = Verdict::recorded;
  std::string invariant;  // what a pass/fail verdict is checking; empty for recorded rows
};

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
  double y_bound = 0.0;
};

struct RunReport {
  std::string scenario_id;
  std::string kind;
  std::uint64_t seed = 0;
  std::string version = kArtifactVersion;
  std::vector<MetricRow> rows;
  std::vector<CurvePoint> curve;
  nlohmann::ordered_json extras;  // kind-specific payloads (e.g. equilibria found)
  double wall_ms = 0.0;           // diagnostic only; excluded from the payload

  bool all_pass() const;
};

// Shortest round-trip decimal representation (what the JSON writer emits too, so
// CSV and JSON numerics parse back to identical doubles).
std::string format_double(double v);

// The deterministic part of a report: everything except diagnostics.
nlohmann::ordered_json report_payload(const RunReport& report);

// Full document: payload plus diagnostics (wall-clock).
nlohmann::ordered_json report_document(const RunReport& report);

std::string report_csv(const RunReport& report);

// Atomic file writes (temp file + rename), one per format.
void write_report_json(const RunReport& report, const std::string& path);
void write_report_csv(const RunReport& report, const std::string& path);

}  // namespace bidrank
