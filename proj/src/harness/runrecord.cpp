#include "bls/harness/runrecord.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace bls::harness {

namespace {
using nlohmann::ordered_json;
}

Comparison make_comparison(std::string name, double lhs, double rhs, double tolerance,
                           std::string tolerance_spec, bool gating) {
  Comparison c;
  c.name = std::move(name);
  c.lhs = lhs;
  c.rhs = rhs;
  c.tolerance = tolerance;
  c.tolerance_spec = std::move(tolerance_spec);
  c.pass = std::isfinite(lhs) && std::isfinite(rhs) && std::abs(lhs - rhs) <= tolerance;
  c.gating = gating;
  return c;
}

const QuantityResult* RunRecord::find_quantity(const std::string& name) const {
  for (const auto& q : quantities)
    if (q.name == name) return &q;
  return nullptr;
}

std::string to_json(const RunRecord& r) {
  ordered_json j;
  j["schema_version"] = r.schema_version;
  j["artifact_version"] = r.artifact_version;
  j["command"] = r.command;
  j["config_hash"] = r.config_hash;
  j["config"] = ordered_json::parse(r.config_json.empty() ? "{}" : r.config_json);
  j["started_at"] = r.started_at;
  j["finished_at"] = r.finished_at;
  j["pass"] = r.pass;
  auto quantities = ordered_json::array();
  for (const auto& q : r.quantities) {
    ordered_json e;
    e["name"] = q.name;
    e["value"] = q.value;
    e["stderr"] = q.stderr_value;
    e["n"] = q.n;
    e["provenance"] = q.provenance;
    e["series"] = q.series;
    e["x"] = q.x;
    e["x2"] = q.x2;
    quantities.push_back(std::move(e));
  }
  j["quantities"] = std::move(quantities);
  auto comparisons = ordered_json::array();
  for (const auto& c : r.comparisons) {
    ordered_json e;
    e["name"] = c.name;
    e["lhs"] = c.lhs;
    e["rhs"] = c.rhs;
    e["tolerance"] = c.tolerance;
    e["tolerance_spec"] = c.tolerance_spec;
    e["pass"] = c.pass;
    e["gating"] = c.gating;
    comparisons.push_back(std::move(e));
  }
  j["comparisons"] = std::move(comparisons);
  auto artifacts = ordered_json::object();
  for (const auto& [name, payload] : r.artifacts) artifacts[name] = payload;
  j["artifacts"] = std::move(artifacts);
  return j.dump(2) + "\n";
}

RunRecord run_record_from_json(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  RunRecord r;
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version != kRecordSchemaVersion)
    throw std::runtime_error("run record: unsupported schema version " +
                             std::to_string(r.schema_version));
  r.artifact_version = j.at("artifact_version").get<std::string>();
  r.command = j.at("command").get<std::string>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.config_json = j.at("config").dump();
  r.started_at = j.at("started_at").get<std::string>();
  r.finished_at = j.at("finished_at").get<std::string>();
  r.pass = j.at("pass").get<bool>();
  for (const auto& e : j.at("quantities")) {
    QuantityResult q;
    q.name = e.at("name").get<std::string>();
    q.value = e.at("value").get<double>();
    q.stderr_value = e.at("stderr").get<double>();
    q.n = e.at("n").get<std::uint64_t>();
    q.provenance = e.at("provenance").get<std::string>();
    q.series = e.at("series").get<std::string>();
    q.x = e.at("x").get<double>();
    q.x2 = e.at("x2").get<double>();
    r.quantities.push_back(std::move(q));
  }
  for (const auto& e : j.at("comparisons")) {
    Comparison c;
    c.name = e.at("name").get<std::string>();
    c.lhs = e.at("lhs").get<double>();
    c.rhs = e.at("rhs").get<double>();
    c.tolerance = e.at("tolerance").get<double>();
    c.tolerance_spec = e.at("tolerance_spec").get<std::string>();
    c.pass = e.at("pass").get<bool>();
    c.gating = e.at("gating").get<bool>();
    r.comparisons.push_back(std::move(c));
  }
  for (const auto& item : j.at("artifacts").items())
    r.artifacts[item.key()] = item.value().get<std::string>();
  return r;
}

std::string emit_plot_data(const RunRecord& record, const std::string& quantity) {
  std::string csv = "x,x2,value,stderr,series\n";
  if (record.quantities.empty()) return csv;
  bool found = false;
  for (const auto& q : record.quantities) {
    if (q.series != quantity) continue;
    found = true;
    char line[256];
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%s\n", q.x, q.x2, q.value,
                  q.stderr_value, q.series.c_str());
    csv += line;
  }
  if (!found) throw std::invalid_argument("emit_plot_data: unknown quantity '" + quantity + "'");
  return csv;
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("short write to '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("cannot rename '" + tmp + "' to '" + path + "'");
  }
}

std::string iso_timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

}  // namespace bls::harness
