#pragma once
// Experiment configuration: canonical JSON round trip, a stable content hash,
// and validation errors that cite the offending line of the config text.

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bls/loopmeasure.hpp"

namespace bls::harness {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One experiment description. `command` selects the pipeline; fields that a
// pipeline does not read keep their defaults and still participate in the
// canonical form, so the hash covers the whole document.
struct ExperimentConfig {
  std::string command;  // simulate | estimate | exact | blocks | perc | verify

  double lambda = 1.0;
  double beta = 3.141592653589793;
  std::uint64_t seed = 1;
  double budget_scale = 1.0;
  std::string out_dir;  // empty: $BLS_OUT_DIR, else the working directory

  std::vector<std::complex<double>> points;
  double t_min = 0, t_max = 0;  // loop-duration window
  sim::Rect region;             // root region; degenerate = derive from the points
  double eps = 0;               // disk radius; finest rung when a ladder is given
  std::vector<double> eps_ladder;
  double delta = 0;   // soup boundary-diameter cutoff
  double delta0 = 0;  // event-level diameter floor for single-disk estimates
  double h = 0;       // bridge step; 0 derives eps / 2
  double grid_res = 0;  // extraction cell; 0 derives eps / 4
  std::uint64_t n_samples = 0;
  std::uint64_t n_realizations = 0;
  std::uint64_t centering_samples = 0;

  int kmax = 6;   // blocks: descendant depth
  int max_p = 3;  // blocks: channel grid extent

  int outer_radius = 1024;
  std::vector<int> inner_radii;  // increasing
  std::uint64_t n_trials = 0;
  bool swap_colors = false;

  std::string verify_mode = "quick";  // quick | full
};

// Parse and validate a JSON document. Syntax errors report line and column;
// field errors report the line of the key. default_command fills a missing
// `command` field (the CLI passes the subcommand name).
ExperimentConfig config_from_json(const std::string& text,
                                  const std::string& default_command = "");
ExperimentConfig load_config(const std::string& path, const std::string& default_command = "");

// Fixed key order, shortest round-trip numbers; parsing the output reproduces
// the struct bit for bit.
std::string to_canonical_json(const ExperimentConfig& cfg);

// FNV-1a (64-bit) over the canonical form, rendered as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace bls::harness
