#pragma once
// Critical site percolation on the triangular lattice: annulus three-arm
// events, ladder estimates, and the arm exponent fit.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bls/stats.hpp"

namespace bls::perc {

// Sites sit at axial coordinates (i, j), embedded in the plane at
// (i + j/2, j sqrt(3)/2), so the squared Euclidean distance to the origin is
// the integer i^2 + i*j + j^2 and each site has six unit-distance neighbours.
// A site belongs to the annulus when r^2 < |site|^2 < R^2. An arm is a path
// of same-state annulus sites whose first site neighbours the disk of radius
// r and whose last site neighbours the complement of the open disk of radius
// R. The three-arm event asks for one open arm and two closed arms that share
// no site; arms of opposite colors are disjoint automatically.
struct ArmExperiment {
  int inner_radius = 2;
  int outer_radius = 8;
  std::uint64_t n_trials = 1000;
  double p = 0.5;  // must stay at the critical value; states are fair bits
  std::uint64_t seed = 1;
  bool swap_colors = false;  // ask for one closed + two open arms instead
};

struct ArmResult {
  stats::Estimate theta;
  bool degenerate = false;  // inner_radius == outer_radius, vacuous crossing
};

ArmResult three_arm_probability(const ArmExperiment& exp);

struct ArmLadderPoint {
  int inner_radius = 0;
  int outer_radius = 0;
  stats::Estimate theta;
};

// Shared-configuration ladder at a fixed outer radius: each trial draws one
// state assignment and evaluates every inner radius on it. The event at a
// smaller inner radius implies the event at a larger one, so ladder ratios
// see strongly correlated noise and their variance shrinks accordingly.
std::vector<ArmLadderPoint> arm_ladder(const std::vector<int>& inner_radii, int outer_radius,
                                       std::uint64_t n_trials, std::uint64_t seed,
                                       bool swap_colors = false);

// Least-squares slope of log(theta) against log(r / R).
stats::SlopeFit fit_arm_exponent(const std::vector<ArmLadderPoint>& ladder);

// Long-format rows "r,R,theta,stderr,n".
std::string to_csv(const std::vector<ArmLadderPoint>& ladder);

// Single-configuration evaluation with caller-supplied states (1 = open,
// 0 = closed), for cross-checks against reference path searches.
bool three_arm_event(int inner_radius, int outer_radius,
                     const std::function<int(int, int)>& state_of, bool swap_colors = false);

}  // namespace bls::perc
