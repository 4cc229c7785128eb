#include "bls/harness/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace bls::harness {

namespace {

using nlohmann::ordered_json;

// 1-based line of the first occurrence of "key" in the document, 0 if absent.
int line_of_key(const std::string& text, const std::string& key) {
  const std::string quoted = "\"" + key + "\"";
  const auto pos = text.find(quoted);
  if (pos == std::string::npos) return 0;
  return 1 + int(std::count(text.begin(), text.begin() + long(pos), '\n'));
}

[[noreturn]] void fail_field(const std::string& text, const std::string& key,
                             const std::string& what) {
  const int line = line_of_key(text, key);
  std::ostringstream os;
  os << "config";
  if (line > 0) os << " line " << line;
  os << ": field '" << key << "': " << what;
  throw ConfigError(os.str());
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "schema_version", "command",     "lambda",         "beta",
      "seed",           "budget_scale", "out_dir",        "points",
      "t_min",          "t_max",       "region",         "eps",
      "eps_ladder",     "delta",       "delta0",         "h",
      "grid_res",       "n_samples",   "n_realizations", "centering_samples",
      "kmax",           "max_p",       "outer_radius",   "inner_radii",
      "n_trials",       "swap_colors", "verify_mode"};
  return keys;
}

bool is_known_command(const std::string& c) {
  return c == "simulate" || c == "estimate" || c == "exact" || c == "blocks" || c == "perc" ||
         c == "verify";
}

void read_double(const ordered_json& j, const std::string& text, const std::string& key,
                 double& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number()) fail_field(text, key, "expected a number");
  out = j.at(key).get<double>();
  if (!std::isfinite(out)) fail_field(text, key, "must be finite");
}

void read_u64(const ordered_json& j, const std::string& text, const std::string& key,
              std::uint64_t& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number_unsigned() && !j.at(key).is_number_integer())
    fail_field(text, key, "expected a non-negative integer");
  if (j.at(key).is_number_integer() && j.at(key).get<std::int64_t>() < 0)
    fail_field(text, key, "expected a non-negative integer");
  out = j.at(key).get<std::uint64_t>();
}

void read_int(const ordered_json& j, const std::string& text, const std::string& key, int& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number_integer() && !j.at(key).is_number_unsigned())
    fail_field(text, key, "expected an integer");
  out = j.at(key).get<int>();
}

void read_string(const ordered_json& j, const std::string& text, const std::string& key,
                 std::string& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_string()) fail_field(text, key, "expected a string");
  out = j.at(key).get<std::string>();
}

void read_bool(const ordered_json& j, const std::string& text, const std::string& key, bool& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_boolean()) fail_field(text, key, "expected a boolean");
  out = j.at(key).get<bool>();
}

void validate(const ExperimentConfig& c, const std::string& text) {
  if (c.command.empty()) fail_field(text, "command", "required");
  if (!is_known_command(c.command))
    fail_field(text, "command",
               "unknown command '" + c.command +
                   "' (expected simulate | estimate | exact | blocks | perc | verify)");
  if (!(c.lambda > 0)) fail_field(text, "lambda", "must be positive");
  if (!(c.budget_scale > 0)) fail_field(text, "budget_scale", "must be positive");
  if (c.eps < 0) fail_field(text, "eps", "must be >= 0");
  if (c.delta < 0) fail_field(text, "delta", "must be >= 0");
  if (c.delta0 < 0) fail_field(text, "delta0", "must be >= 0");
  if (c.h < 0) fail_field(text, "h", "must be >= 0");
  if (c.grid_res < 0) fail_field(text, "grid_res", "must be >= 0");
  if (c.points.size() > 16) fail_field(text, "points", "at most 16 points");
  for (std::size_t i = 0; i < c.points.size(); ++i)
    for (std::size_t j = i + 1; j < c.points.size(); ++j)
      if (c.points[i] == c.points[j]) fail_field(text, "points", "points must be distinct");
  for (std::size_t i = 0; i < c.eps_ladder.size(); ++i)
    if (!(c.eps_ladder[i] > 0) || (i > 0 && !(c.eps_ladder[i] < c.eps_ladder[i - 1])))
      fail_field(text, "eps_ladder", "must be positive and strictly decreasing");

  const bool needs_window = c.command == "simulate" || c.command == "estimate";
  if (needs_window) {
    if (!(c.t_min >= 0) || !(c.t_max > c.t_min))
      fail_field(text, "t_max", "need 0 <= t_min < t_max");
    if (c.points.empty() && c.command == "estimate") fail_field(text, "points", "required");
    if (c.eps <= 0 && c.eps_ladder.empty() && c.points.size() < 2 && c.command == "estimate")
      fail_field(text, "eps", "need eps or eps_ladder (the default ladder needs >= 2 points)");
  }
  if (c.command == "estimate") {
    if (c.points.size() > 6) fail_field(text, "points", "at most 6 points in the subset battery");
    if (c.points.size() == 1 && !(c.delta0 > 0))
      fail_field(text, "delta0", "single-point estimates need a boundary-diameter cutoff");
  }
  if (c.command == "simulate") {
    if (!(c.region.area() > 0)) fail_field(text, "region", "must have positive area");
    if (!(c.delta > 0)) fail_field(text, "delta", "must be positive");
    if (c.n_realizations == 0) fail_field(text, "n_realizations", "must be positive");
  }
  if (c.command == "estimate" && c.n_samples == 0)
    fail_field(text, "n_samples", "must be positive");
  if (c.command == "exact" && !c.points.empty() && c.points.size() != 4)
    fail_field(text, "points", "exact pipeline takes 0 or 4 points");
  if (c.command == "blocks") {
    if (c.kmax < 1 || c.kmax > 8) fail_field(text, "kmax", "expected 1..8");
    if (c.max_p < 0 || c.max_p > 4) fail_field(text, "max_p", "expected 0..4");
  }
  if (c.command == "perc") {
    if (c.inner_radii.empty()) fail_field(text, "inner_radii", "required");
    for (std::size_t i = 0; i < c.inner_radii.size(); ++i) {
      if (c.inner_radii[i] < 2) fail_field(text, "inner_radii", "radii must be >= 2");
      if (i > 0 && c.inner_radii[i] <= c.inner_radii[i - 1])
        fail_field(text, "inner_radii", "must be strictly increasing");
    }
    if (c.outer_radius < c.inner_radii.back())
      fail_field(text, "outer_radius", "must be >= the largest inner radius");
    if (c.outer_radius > 4096) fail_field(text, "outer_radius", "at most 4096");
    if (c.n_trials == 0) fail_field(text, "n_trials", "must be positive");
  }
  if (c.command == "verify" && c.verify_mode != "quick" && c.verify_mode != "full")
    fail_field(text, "verify_mode", "expected quick | full");
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text, const std::string& default_command) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    // Recover line/column from the byte offset for a uniform message.
    std::size_t byte = e.byte > 0 ? std::size_t(e.byte - 1) : 0;
    byte = std::min(byte, text.size());
    const int line = 1 + int(std::count(text.begin(), text.begin() + long(byte), '\n'));
    const auto bol = text.rfind('\n', byte == 0 ? 0 : byte - 1);
    const int col = int(byte - (bol == std::string::npos ? 0 : bol + 1)) + 1;
    std::ostringstream os;
    os << "config line " << line << ", column " << col << ": " << e.what();
    throw ConfigError(os.str());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  for (const auto& item : j.items())
    if (known_keys().find(item.key()) == known_keys().end())
      fail_field(text, item.key(), "unknown key");

  if (j.contains("schema_version")) {
    int v = -1;
    read_int(j, text, "schema_version", v);
    if (v != 1) fail_field(text, "schema_version", "supported version is 1");
  }

  ExperimentConfig c;
  c.command = default_command;
  read_string(j, text, "command", c.command);
  read_double(j, text, "lambda", c.lambda);
  read_double(j, text, "beta", c.beta);
  read_u64(j, text, "seed", c.seed);
  read_double(j, text, "budget_scale", c.budget_scale);
  read_string(j, text, "out_dir", c.out_dir);

  if (j.contains("points")) {
    const auto& p = j.at("points");
    if (!p.is_array()) fail_field(text, "points", "expected an array of [x, y] pairs");
    for (const auto& e : p) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        fail_field(text, "points", "expected an array of [x, y] pairs");
      c.points.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
  }
  read_double(j, text, "t_min", c.t_min);
  read_double(j, text, "t_max", c.t_max);
  if (j.contains("region")) {
    const auto& r = j.at("region");
    if (!r.is_array() || r.size() != 4) fail_field(text, "region", "expected [xmin, xmax, ymin, ymax]");
    for (const auto& e : r)
      if (!e.is_number()) fail_field(text, "region", "expected [xmin, xmax, ymin, ymax]");
    c.region = sim::Rect{r[0].get<double>(), r[1].get<double>(), r[2].get<double>(),
                         r[3].get<double>()};
  }
  read_double(j, text, "eps", c.eps);
  if (j.contains("eps_ladder")) {
    const auto& l = j.at("eps_ladder");
    if (!l.is_array()) fail_field(text, "eps_ladder", "expected an array of numbers");
    for (const auto& e : l) {
      if (!e.is_number()) fail_field(text, "eps_ladder", "expected an array of numbers");
      c.eps_ladder.push_back(e.get<double>());
    }
  }
  read_double(j, text, "delta", c.delta);
  read_double(j, text, "delta0", c.delta0);
  read_double(j, text, "h", c.h);
  read_double(j, text, "grid_res", c.grid_res);
  read_u64(j, text, "n_samples", c.n_samples);
  read_u64(j, text, "n_realizations", c.n_realizations);
  read_u64(j, text, "centering_samples", c.centering_samples);
  read_int(j, text, "kmax", c.kmax);
  read_int(j, text, "max_p", c.max_p);
  read_int(j, text, "outer_radius", c.outer_radius);
  if (j.contains("inner_radii")) {
    const auto& l = j.at("inner_radii");
    if (!l.is_array()) fail_field(text, "inner_radii", "expected an array of integers");
    for (const auto& e : l) {
      if (!e.is_number_integer() && !e.is_number_unsigned())
        fail_field(text, "inner_radii", "expected an array of integers");
      c.inner_radii.push_back(e.get<int>());
    }
  }
  read_u64(j, text, "n_trials", c.n_trials);
  read_bool(j, text, "swap_colors", c.swap_colors);
  read_string(j, text, "verify_mode", c.verify_mode);

  validate(c, text);
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::string& default_command) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str(), default_command);
}

std::string to_canonical_json(const ExperimentConfig& c) {
  ordered_json j;
  j["schema_version"] = 1;
  j["command"] = c.command;
  j["lambda"] = c.lambda;
  j["beta"] = c.beta;
  j["seed"] = c.seed;
  j["budget_scale"] = c.budget_scale;
  j["out_dir"] = c.out_dir;
  auto points = ordered_json::array();
  for (const auto& z : c.points) points.push_back({z.real(), z.imag()});
  j["points"] = std::move(points);
  j["t_min"] = c.t_min;
  j["t_max"] = c.t_max;
  j["region"] = {c.region.xmin, c.region.xmax, c.region.ymin, c.region.ymax};
  j["eps"] = c.eps;
  j["eps_ladder"] = c.eps_ladder;
  j["delta"] = c.delta;
  j["delta0"] = c.delta0;
  j["h"] = c.h;
  j["grid_res"] = c.grid_res;
  j["n_samples"] = c.n_samples;
  j["n_realizations"] = c.n_realizations;
  j["centering_samples"] = c.centering_samples;
  j["kmax"] = c.kmax;
  j["max_p"] = c.max_p;
  j["outer_radius"] = c.outer_radius;
  j["inner_radii"] = c.inner_radii;
  j["n_trials"] = c.n_trials;
  j["swap_colors"] = c.swap_colors;
  j["verify_mode"] = c.verify_mode;
  return j.dump();
}

std::string config_hash(const ExperimentConfig& c) {
  const std::string s = to_canonical_json(c);
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char b : s) {
    hash ^= b;
    hash *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return std::string(buf);
}

}  // namespace bls::harness
