#pragma once
// Run artifacts: named quantities with provenance, tolerance-named comparisons,
// a versioned JSON round trip, atomic file writes, and plot-data extraction.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bls::harness {

inline constexpr int kRecordSchemaVersion = 1;
inline constexpr const char* kArtifactVersion = "0.1.0";

struct QuantityResult {
  std::string name;
  double value = 0;
  double stderr_value = 0;  // 0 for deterministic quantities
  std::uint64_t n = 0;      // sample count; 0 for deterministic quantities
  std::string provenance;   // "mc" | "exact" | "blocks"
  // Plot coordinates: x (and x2 for grids) under a shared series label.
  std::string series;
  double x = 0, x2 = 0;
};

struct Comparison {
  std::string name;
  double lhs = 0, rhs = 0;
  double tolerance = 0;        // absolute bound actually applied to |lhs - rhs|
  std::string tolerance_spec;  // rule the bound came from, e.g. "3*stderr", "abs 1e-10"
  bool pass = false;
  bool gating = true;  // hypothesis checks are recorded but never gate
};

Comparison make_comparison(std::string name, double lhs, double rhs, double tolerance,
                           std::string tolerance_spec, bool gating = true);

struct RunRecord {
  int schema_version = kRecordSchemaVersion;
  std::string artifact_version = kArtifactVersion;
  std::string command;
  std::string config_hash;
  std::string config_json;  // canonical config; the record re-verifies from this
  std::string started_at, finished_at;  // UTC, ISO 8601
  std::vector<QuantityResult> quantities;
  std::vector<Comparison> comparisons;
  std::map<std::string, std::string> artifacts;  // name -> CSV/JSON payload
  bool pass = true;  // conjunction of gating comparisons

  const QuantityResult* find_quantity(const std::string& name) const;
};

std::string to_json(const RunRecord& record);
RunRecord run_record_from_json(const std::string& text);

// Long-format CSV (x, x2, value, stderr, series) of every quantity under the
// given series label. An empty record yields the header alone; an unknown
// label on a non-empty record is an error.
std::string emit_plot_data(const RunRecord& record, const std::string& quantity);

// Write via a temporary in the target directory plus rename, so readers never
// observe a partial file.
void write_atomic(const std::string& path, const std::string& content);

std::string iso_timestamp_utc();

}  // namespace bls::harness
