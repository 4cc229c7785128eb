#include "bls/loopmeasure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bls/kernels.hpp"

namespace bls::sim {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kStepKappa = 2.0;  // steps = kappa * t / h^2
constexpr std::size_t kStepFloor = 64;
constexpr std::size_t kStepCap = std::size_t{1} << 22;
}  // namespace

Rect intersect(const Rect& a, const Rect& b) {
  Rect r{std::max(a.xmin, b.xmin), std::min(a.xmax, b.xmax), std::max(a.ymin, b.ymin),
         std::min(a.ymax, b.ymax)};
  if (r.xmin > r.xmax) r.xmax = r.xmin;
  if (r.ymin > r.ymax) r.ymax = r.ymin;
  return r;
}

Rect inflate(const Rect& r, double margin) {
  return {r.xmin - margin, r.xmax + margin, r.ymin - margin, r.ymax + margin};
}

double MeasureWindow::mass() const {
  if (!(t_min > 0) || !(t_max >= t_min)) return 0.0;
  return region.area() * (1.0 / t_min - 1.0 / t_max) / kTwoPi;
}

std::size_t bridge_steps(double t, double h) {
  if (!(t > 0) || !(h > 0)) throw std::invalid_argument("bridge_steps: t and h must be positive");
  const double raw = std::ceil(kStepKappa * t / (h * h));
  if (raw >= double(kStepCap)) return kStepCap;
  return std::max(kStepFloor, static_cast<std::size_t>(raw));
}

void sample_bridge(cd root, double t, std::size_t n_steps, Rng& rng, std::vector<double>& xs,
                   std::vector<double>& ys) {
  if (!(t > 0)) throw std::invalid_argument("sample_bridge: duration must be positive");
  if (n_steps < 4) throw std::invalid_argument("sample_bridge: need at least 4 steps");
  const std::size_t n = n_steps;
  xs.resize(n + 1);
  ys.resize(n + 1);
  const double sigma = std::sqrt(t / double(n));
  double wx = 0.0, wy = 0.0;
  xs[0] = 0.0;
  ys[0] = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    wx += sigma * rng.normal();
    wy += sigma * rng.normal();
    xs[k] = wx;
    ys[k] = wy;
  }
  // Pin the endpoint: B_k = W_k - (k/n) W_n + root.
  const double fx = wx / double(n), fy = wy / double(n);
  const double rx = root.real(), ry = root.imag();
  for (std::size_t k = 0; k <= n; ++k) {
    xs[k] += rx - fx * double(k);
    ys[k] += ry - fy * double(k);
  }
  xs[n] = rx;
  ys[n] = ry;
}

LoopSample sample_bridge(cd root, double t, std::size_t n_steps, Rng& rng) {
  LoopSample s;
  s.root = root;
  s.duration = t;
  s.weight = 1.0;
  sample_bridge(root, t, n_steps, rng, s.xs, s.ys);
  return s;
}

namespace {

// Inverse CDF of the density proportional to t^{-2} on [t_lo, t_hi].
double sample_t_inv_sq(double t_lo, double t_hi, double u) {
  const double a = 1.0 / t_lo, b = 1.0 / t_hi;
  return 1.0 / (a - u * (a - b));
}

cd sample_in_rect(const Rect& r, Rng& rng) {
  return {rng.uniform(r.xmin, r.xmax), rng.uniform(r.ymin, r.ymax)};
}

}  // namespace

void sample_loop_from_measure(const MeasureWindow& window, Rng& rng, double h, LoopSample& out) {
  const double m = window.mass();
  if (!(m > 0)) throw std::invalid_argument("sample_loop_from_measure: window has zero mass");
  const double t = sample_t_inv_sq(window.t_min, window.t_max, rng.uniform());
  const cd root = sample_in_rect(window.region, rng);
  out.root = root;
  out.duration = t;
  out.weight = m;
  sample_bridge(root, t, bridge_steps(t, h), rng, out.xs, out.ys);
}

LoopSample sample_loop_from_measure(const MeasureWindow& window, Rng& rng, double h) {
  LoopSample s;
  sample_loop_from_measure(window, rng, h, s);
  return s;
}

double TargetedProposal::t_lo() const { return std::max(window.t_min, t_floor); }

void sample_loop_targeted(const TargetedProposal& prop, Rng& rng, double h, LoopSample& out) {
  const double lo = prop.t_lo(), hi = prop.window.t_max;
  if (!(lo > 0) || !(hi > lo)) throw std::invalid_argument("sample_loop_targeted: empty t band");
  const double t = sample_t_inv_sq(lo, hi, rng.uniform());
  const Rect roi = intersect(inflate(prop.query_bbox, prop.root_spread * std::sqrt(t) + prop.margin),
                             prop.window.region);
  const double area = roi.area();
  if (!(area > 0)) throw std::invalid_argument("sample_loop_targeted: empty root region");
  const cd root = sample_in_rect(roi, rng);
  out.root = root;
  out.duration = t;
  // Proposal density: (1/area) * t^{-2} / (1/lo - 1/hi); measure density t^{-2}/(2 pi).
  out.weight = area * (1.0 / lo - 1.0 / hi) / kTwoPi;
  sample_bridge(root, t, bridge_steps(t, h), rng, out.xs, out.ys);
}

namespace {

bool inside_domain(const DomainSpec& domain, const geom::SimpleLoop& loop) {
  switch (domain.kind) {
    case DomainKind::full_plane:
      return true;
    case DomainKind::upper_half_plane:
      return loop.bbox[2] > 0.0;
    case DomainKind::unit_disk: {
      const double mx = std::max(std::abs(loop.bbox[0]), std::abs(loop.bbox[1]));
      const double my = std::max(std::abs(loop.bbox[2]), std::abs(loop.bbox[3]));
      return mx * mx + my * my < 1.0;
    }
  }
  return false;
}

}  // namespace

SoupRealization sample_soup(const DomainSpec& domain, const MeasureWindow& window, double lambda,
                            double delta, double resolution, double h, Rng& rng) {
  if (!(lambda > 0)) throw std::invalid_argument("sample_soup: lambda must be positive");
  if (!(delta >= 0)) throw std::invalid_argument("sample_soup: delta must be nonnegative");
  const double m = window.mass();
  if (!(m > 0)) throw std::invalid_argument("sample_soup: window has zero mass");

  SoupRealization soup;
  soup.lambda = lambda;
  soup.delta = delta;
  const std::uint64_t count = rng.poisson(lambda * m);
  soup.loops.reserve(count / 4 + 1);
  LoopSample sample;
  double bb[4];
  for (std::uint64_t i = 0; i < count; ++i) {
    const double t = sample_t_inv_sq(window.t_min, window.t_max, rng.uniform());
    const cd root = sample_in_rect(window.region, rng);
    sample_bridge(root, t, bridge_steps(t, h), rng, sample.xs, sample.ys);
    kern::kernels().bbox(sample.xs.data(), sample.ys.data(), sample.xs.size(), bb);
    const double w = bb[1] - bb[0], ht = bb[3] - bb[2];
    // The outer boundary's diameter never exceeds the path's, so a small path
    // bounding box settles the delta filter without extraction.
    if (std::hypot(w, ht) < delta) continue;
    const double side = std::max(w, ht);
    const double res_eff = std::max(resolution, side / 4000.0);
    geom::SimpleLoop loop;
    try {
      loop = geom::outer_boundary(sample.xs, sample.ys, res_eff);
    } catch (const geom::DegenerateLoop&) {
      continue;
    }
    if (loop.diameter < delta) continue;
    if (!inside_domain(domain, loop)) continue;
    soup.loops.push_back(std::move(loop));
    soup.spins.push_back(rng.coin() ? 1 : -1);
  }
  return soup;
}

}  // namespace bls::sim
