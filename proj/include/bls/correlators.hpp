#pragma once
// Monte Carlo estimation of normalized loop-hit intensities (alpha tables),
// the combinatorial assemblies that turn them into n-point functions, and an
// exact Poisson toy model the assemblies are validated against.

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bls/loopmeasure.hpp"
#include "bls/rng.hpp"
#include "bls/stats.hpp"

namespace bls::corr {

using cd = std::complex<double>;

struct IncompleteTable : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CalibrationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Combinatorics

// Set partitions of {0..n-1} with every block of size >= 2. Each partition is a
// list of blocks given as bitmasks, blocks ordered by lowest element. n <= 16.
std::vector<std::vector<std::uint32_t>> partitions_min2(int n);

// Multisets of subsets S (|S| >= 2, bitmask over k.size() points) whose
// per-point multiplicities sum to k_j exactly. Entries are (mask, multiplicity)
// with masks strictly increasing. sum(k) <= 32.
using SubsetMultiset = std::vector<std::pair<std::uint32_t, int>>;
std::vector<SubsetMultiset> multisets_with_multiplicity(const std::vector<int>& k);

// ---------------------------------------------------------------------------
// Loop-hit events

// Event on a single loop against the query points: the loop must hit the
// eps-disk of every subset point; optionally separate points sep_a | sep_b
// (exactly one interior); optionally cover (interior) / avoid (exterior) a
// point. Indices refer to the config's point list; -1 disables a clause.
struct EventKey {
  std::uint32_t subset = 0;
  int sep_a = -1, sep_b = -1;
  int cover = -1;
  int avoid = -1;

  int hit_count() const;
  bool operator==(const EventKey& o) const;
  std::string label() const;
};

struct EstimatorConfig {
  std::vector<cd> points;
  sim::MeasureWindow window;
  double eps = 0;       // disk radius of the current ladder rung
  double h = 0;         // bridge spatial step
  double grid_res = 0;  // boundary extraction cell size
  int grid_cap = 4096;
  double delta0 = 0;  // if > 0, events also require boundary diameter >= delta0
  std::uint64_t n_samples = 0;
};

// Windowed measure of each event, importance-sampled from a proposal targeted
// at the query cluster; all events share one proposal stream.
std::vector<stats::Estimate> estimate_events(const EstimatorConfig& cfg,
                                             const std::vector<EventKey>& events, Rng& rng);
stats::Estimate estimate_event_mass(const EstimatorConfig& cfg, const EventKey& event, Rng& rng);

// Ladder variant: one proposal stream, hit indicators thinned through a strictly
// decreasing eps ladder (gating and validation use the coarsest rung; cfg.eps is
// ignored). Result is indexed [rung][event]; rung estimates are positively
// correlated by construction, which tightens ratio and slope statistics.
std::vector<std::vector<stats::Estimate>> estimate_events_ladder(
    const EstimatorConfig& cfg, const std::vector<EventKey>& events,
    const std::vector<double>& eps_ladder, Rng& rng);

// eps^{-2k/3}-normalized event mass, k = number of required disk hits. The
// calibration constant is applied at table construction, not here.
stats::Estimate estimate_alpha(const EstimatorConfig& cfg, const EventKey& event, Rng& rng);

// Calibration: fixes chat so that chat^2 * eps^{-4/3} * mass(hit both) equals
// the canonical two-point value |z1-z2|^{-4/3} for the config's first two points.
struct ChatCalibration {
  double chat = 0;
  stats::Estimate raw_alpha;  // eps^{-4/3} * mass, before calibration
  double eps = 0;
};
ChatCalibration calibrate_chat(const EstimatorConfig& cfg, Rng& rng);

// ---------------------------------------------------------------------------
// Alpha table

struct AlphaEntry {
  EventKey key;
  double eps = 0;
  stats::Estimate raw_mass;   // windowed event measure
  stats::Estimate alpha_hat;  // chat^k * eps^{-2k/3} * raw_mass (k disk hits)
};

struct AlphaTable {
  std::vector<cd> points;
  std::vector<double> eps_ladder;  // decreasing; entries exist per rung
  double chat = 1.0;
  double lambda = 1.0;
  bool normalized = false;  // whether chat has been folded into alpha_hat
  std::string config_hash;
  std::vector<AlphaEntry> entries;

  const AlphaEntry* find(const EventKey& key, double eps) const;
  // Finest-rung normalized value; throws IncompleteTable when absent.
  double alpha(const EventKey& key) const;
  const AlphaEntry& entry(const EventKey& key) const;
};

// Versioned JSON round trip.
std::string to_json(const AlphaTable& table);
AlphaTable alpha_table_from_json(const std::string& json_text);

// ---------------------------------------------------------------------------
// Assemblies

// Unnormalized n-point of centered counts: sum over partitions (blocks >= 2)
// of lambda^{#blocks} * prod mass(block mask).
double npoint_edge_raw(const std::function<double(std::uint32_t)>& mass, double lambda, int n);

// Unnormalized product of centered Charlier counts:
// (prod k_j!) * sum over multisets of prod (lambda * mass(S))^{m_S} / m_S!.
double npoint_higher_raw(const std::function<double(std::uint32_t)>& mass, double lambda,
                         const std::vector<int>& k);

// Twisted unnormalized n-point: counts centered at the untwisted means while
// separating loops are reweighted by cos(beta). mass_sep(S) is the mass of
// loops hitting all of S that also separate the twist pair.
double npoint_edge_twisted_raw(const std::function<double(std::uint32_t)>& mass,
                               const std::function<double(std::uint32_t)>& mass_sep,
                               double lambda, double cos_beta, int n);

// Operator-normalized evaluations over an alpha table.
double npoint_edge_formula(const AlphaTable& table, int n);
double npoint_higher_order_formula(const AlphaTable& table, const std::vector<int>& k);

// Charged two-point bracket (normalized by the layering two-point):
//   alpha(12) - (1-cos b) alpha_sep(12) + lambda (1-cos b)^2 A(1) A(2),
// A(j) = alpha of {hit j, other point covered, j not covered}.
double charged_two_point(const AlphaTable& table, double beta);

// ---------------------------------------------------------------------------
// Exact Poisson toy model

struct ToyAtom {
  double mass = 0;
  std::uint32_t hits = 0;     // bitmask of points this atom's loops hit
  bool separating = false;    // carries the twist phase
};

// Exact expectation of prod_j E^{(k_j)}(N_j) under the compound Poisson model,
// via the truncated probability generating function. Centering constants are
// always the untwisted means; `twisted` tilts separating atoms by cos(beta).
double toy_poisson_oracle(const std::vector<ToyAtom>& atoms, double lambda,
                          const std::vector<int>& k, bool twisted = false, double beta = 0.0);

// Superset-inclusive event masses of the toy model, for feeding the assemblies.
double toy_mass(const std::vector<ToyAtom>& atoms, std::uint32_t subset, bool separating_only = false);

// ---------------------------------------------------------------------------
// Soup-level estimator

struct SoupConfig {
  std::vector<cd> points;
  sim::MeasureWindow window;  // t band and outer region of the soup
  double lambda = 1.0;
  double eps = 0;
  double delta = 0;  // boundary-diameter cutoff of the soup
  double h = 0, grid_res = 0;
  int grid_cap = 4096;
  double margin = 0;          // extra root-region inflation, typically 2 * eps
  std::uint64_t n_realizations = 0;
  std::uint64_t centering_samples = 0;  // loop draws for the centering pre-pass
  // Twist decoration: loops separating points twist_a | twist_b carry phases.
  // Anchor points contribute no count factor to the product.
  int twist_a = -1, twist_b = -1;
  double beta = 0;
  bool spin_sampled = false;  // sample spins instead of analytic cos(beta) weights
};

struct SoupResult {
  stats::Estimate product_mean;  // <prod_j (N_j - nu_j)>, twisted if configured
  std::vector<double> nu;        // centering constants from the pre-pass
  double sep_mass = 0;           // windowed mass of separating loops (pre-pass)
  std::uint64_t loops_total = 0;
};

SoupResult soup_estimate_npoint(const SoupConfig& cfg, Rng& rng);

}  // namespace bls::corr
