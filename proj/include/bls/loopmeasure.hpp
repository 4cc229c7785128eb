#pragma once
// Sampling from the windowed Brownian loop measure: time-scaled Brownian
// bridges, importance proposals targeted at query neighborhoods, and Poisson
// soup realizations.

#include <complex>
#include <cstdint>
#include <vector>

#include "bls/geometry.hpp"
#include "bls/rng.hpp"

namespace bls::sim {

using cd = std::complex<double>;

struct Rect {
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  bool contains(cd z) const {
    return z.real() >= xmin && z.real() <= xmax && z.imag() >= ymin && z.imag() <= ymax;
  }
};

Rect intersect(const Rect& a, const Rect& b);
Rect inflate(const Rect& r, double margin);

enum class DomainKind { full_plane, upper_half_plane, unit_disk };

struct DomainSpec {
  DomainKind kind = DomainKind::full_plane;
  Rect window;  // spatial truncation for the full plane
};

// Root-and-duration window of the loop measure. The measure restricted to the
// window has density t^{-2}/(2*pi) dt dA(root) and finite total mass.
struct MeasureWindow {
  double t_min = 0, t_max = 0;
  Rect region;

  double mass() const;
};

struct LoopSample {
  cd root;
  double duration = 0;
  std::vector<double> xs, ys;  // closed: front == back
  double weight = 0;           // density ratio d(mu) / d(proposal)
};

struct SoupRealization {
  std::vector<geom::SimpleLoop> loops;
  std::vector<std::int8_t> spins;
  double lambda = 0;
  double delta = 0;
  std::uint64_t seed = 0;
};

// Vertex-count policy: per-step spatial standard deviation about h/sqrt(2),
// floor of 64 steps, hard cap 2^22.
std::size_t bridge_steps(double t, double h);

// Closed Brownian bridge of duration t rooted at `root`, n_steps increments
// (n_steps + 1 vertices), per-coordinate variance s(t-s)/t at interior times.
void sample_bridge(cd root, double t, std::size_t n_steps, Rng& rng,
                   std::vector<double>& xs, std::vector<double>& ys);
LoopSample sample_bridge(cd root, double t, std::size_t n_steps, Rng& rng);

// One sample from the window: duration by exact inverse CDF of the t^{-2}
// density, root uniform on the region, weight = window.mass(). Averaging
// f(sample) * weight over draws estimates the windowed integral of f.
LoopSample sample_loop_from_measure(const MeasureWindow& window, Rng& rng, double h);
void sample_loop_from_measure(const MeasureWindow& window, Rng& rng, double h, LoopSample& out);

// Importance proposal concentrated near a query cluster. Durations follow the
// exact t^{-2} profile on [max(t_min, t_floor), t_max]; given t the root is
// uniform on the query bounding box inflated by (root_spread * sqrt(t) + margin),
// intersected with the window region. The weight is the exact density ratio, so
// weighted averages estimate the same windowed integrals; loops rooted outside
// the proposal support carry measure below the Gaussian bridge-range tail
// (root_spread = 3.5 keeps that below 1e-10 relative).
struct TargetedProposal {
  MeasureWindow window;
  Rect query_bbox;
  double t_floor = 0;        // typically (d_event / 6)^2
  double margin = 0;         // typically 2 * eps
  double root_spread = 3.5;  // sqrt(t) multiples of bridge range kept

  double t_lo() const;
};

void sample_loop_targeted(const TargetedProposal& prop, Rng& rng, double h, LoopSample& out);

// Poisson realization of the soup at intensity lambda over the window. Loops
// are extracted at `resolution` (coarsened when the grid cap would be hit) and
// those with outer-boundary diameter < delta are discarded, as are loops not
// contained in a half-plane or disk domain. Spins are fair +-1.
SoupRealization sample_soup(const DomainSpec& domain, const MeasureWindow& window, double lambda,
                            double delta, double resolution, double h, Rng& rng);

}  // namespace bls::sim
