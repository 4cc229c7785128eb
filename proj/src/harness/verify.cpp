#include "bls/harness/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <stdexcept>

#include "bls/correlators.hpp"
#include "bls/exactcft.hpp"
#include "bls/percolation.hpp"
#include "bls/rng.hpp"
#include "bls/stats.hpp"
#include "bls/virblocks.hpp"

namespace bls::harness {
namespace {

using cd = std::complex<double>;

// Frozen 16-digit references for the structure-constant closed forms, computed
// from an independent high-precision Gamma evaluation (arbitrary-precision
// session; values recorded once and pinned here). The published six-digit
// snapshots -0.964278 and 0.622640 sit 1.0e-5 and 3.0e-5 away from these, so
// the gate binds against the full-precision values.
constexpr double kCooRef = -0.9642882209607898;   // C^E_OO at lambda = 1, beta = pi
constexpr double kCeeeRef = 0.6226702166834314;   // C^E_EE at lambda = 1
constexpr double kSqrt2 = 1.4142135623730951;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::uint64_t budget(double base, double scale) {
  const double v = base * scale;
  return v < 1000.0 ? 1000 : std::uint64_t(std::llround(v));
}

// Root region covering every proposal ROI of the window: the query bounding box
// inflated by the 3.5-sigma bridge spread at t_max plus the estimator margin.
// Built from the same formula on both sides of any scale-map comparison so the
// truncated estimands transform exactly.
sim::Rect auto_region(const std::vector<cd>& points, double t_max, double margin) {
  sim::Rect r{points[0].real(), points[0].real(), points[0].imag(), points[0].imag()};
  for (const cd& z : points) {
    r.xmin = std::min(r.xmin, z.real());
    r.xmax = std::max(r.xmax, z.real());
    r.ymin = std::min(r.ymin, z.imag());
    r.ymax = std::max(r.ymax, z.imag());
  }
  return sim::inflate(r, 3.5 * std::sqrt(t_max) + margin);
}

QuantityResult quantity(const std::string& name, double value, double se, std::uint64_t n,
                        const std::string& provenance, const std::string& series = "",
                        double x = 0, double x2 = 0) {
  QuantityResult q;
  q.name = name;
  q.value = value;
  q.stderr_value = se;
  q.n = n;
  q.provenance = provenance;
  q.series = series;
  q.x = x;
  q.x2 = x2;
  return q;
}

// Ratio s/p of two nested event masses estimated from one proposal stream
// (every s-loop is a p-loop, so cov(s_hat, p_hat) ~ var(s_hat)).
stats::Estimate nested_ratio(const stats::Estimate& s, const stats::Estimate& p) {
  const double r = s.value / p.value;
  const double vs = s.stderr_value * s.stderr_value;
  const double vp = p.stderr_value * p.stderr_value;
  double var = r * r * (vs / (s.value * s.value) + vp / (p.value * p.value)
                        - 2.0 * vs / (s.value * p.value));
  if (var < 0) var = 0;
  return {r, std::sqrt(var), s.n};
}

// ---------------------------------------------------------------------------
// Deterministic criteria

CriterionResult criterion1() {
  Timer t;
  CriterionResult r;
  r.index = 1;
  r.name = "structure-constant closed forms vs frozen Gamma references";
  const double coo = cft::c_E_OO(1.0, M_PI);
  const double ceee = cft::c_E_EE(1.0);
  const double ce2 = cft::ope_constants(1.0, M_PI).c_E2_EE;
  r.checks.push_back(make_comparison("C^E_OO(1, pi)", coo, kCooRef, 1e-5, "abs 1e-5"));
  r.checks.push_back(make_comparison("C^E_EE(1)", ceee, kCeeeRef, 1e-5, "abs 1e-5"));
  r.checks.push_back(make_comparison("C^E2_EE = sqrt(2)", ce2, kSqrt2, 1e-12, "abs 1e-12"));
  r.note = "six-digit published snapshots are 1e-5/3e-5 off the Gamma closed forms;"
           " the 16-digit references gate";
  r.seconds = t.seconds();
  return r;
}

CriterionResult criterion2() {
  Timer t;
  CriterionResult r;
  r.index = 2;
  r.name = "twist four-point short-distance normalization";
  const cd z1{-0.2, 0.0}, z2{1.1, 0.0}, z3{0.4, 0.5};
  const double d = 1e-3;
  double worst = 1.0;
  for (double th : {0.0, 0.7, 2.1}) {
    const cd z4 = z3 + d * cd{std::cos(th), std::sin(th)};
    const double v = std::pow(std::abs(z4 - z3), 4.0 / 3.0) * cft::z_twist(z1, z2, z3, z4);
    if (std::fabs(v - 1.0) > std::fabs(worst - 1.0)) worst = v;
  }
  r.checks.push_back(make_comparison("|z34|^{4/3} Z_twist at |z34| = 1e-3 (worst direction)",
                                     worst, 1.0, 1e-2, "abs 1e-2"));
  r.seconds = t.seconds();
  return r;
}

CriterionResult criterion3(std::vector<QuantityResult>& qs) {
  Timer t;
  CriterionResult r;
  r.index = 3;
  r.name = "four-point block decomposition spectrum";
  const auto oc = cft::ope_constants(1.0, M_PI);
  const auto table = vir::decompose_fourpoint(1.0, M_PI, 6, 3);
  const double elapsed = t.seconds();

  const auto site = [&](int p, int pbar) -> double {
    const auto* e = table.find(p, pbar);
    if (!e) throw std::runtime_error("decomposition is missing a requested site");
    return e->product;
  };
  r.checks.push_back(make_comparison("site (0,0) product", site(0, 0), 1.0, 1e-10, "abs 1e-10"));
  r.checks.push_back(make_comparison("site (1,1) product", site(1, 1), oc.c_E_EE * oc.c_E_OO,
                                     1e-6, "abs 1e-6"));
  r.checks.push_back(make_comparison("site (2,2) product", site(2, 2), oc.c_E_OO * oc.c_E_OO,
                                     1e-6, "abs 1e-6"));
  double forbidden = 0;
  for (const auto& e : table.entries)
    if ((e.p + e.pbar) % 2 == 1) forbidden = std::max(forbidden, std::fabs(e.product));
  r.checks.push_back(
      make_comparison("max |product| over parity-forbidden sites", forbidden, 0.0, 1e-8, "abs 1e-8"));
  r.checks.push_back(make_comparison("decomposition runtime (s)", elapsed, 0.0, 120.0, "< 120 s"));

  for (const auto& e : table.entries)
    qs.push_back(quantity("spectrum_p" + std::to_string(e.p) + "_pb" + std::to_string(e.pbar),
                          e.product, 0, 1, "blocks", "spectrum", e.p, e.pbar));
  r.seconds = t.seconds();
  return r;
}

CriterionResult criterion4(std::vector<QuantityResult>& qs) {
  Timer t;
  CriterionResult r;
  r.index = 4;
  r.name = "central charge recovered from the vacuum channel";
  for (double lambda : {0.5, 1.0, 2.0}) {
    const auto c = vir::central_charge_check(lambda, M_PI);
    const std::string tag = " (lambda = " + fmt("%g", lambda) + ")";
    r.checks.push_back(make_comparison("c recovered" + tag, c.c_recovered, 2.0 * lambda, 1e-8,
                                       "abs 1e-8"));
    r.checks.push_back(make_comparison("raw vacuum coefficient" + tag, c.raw_coeff, 1.0 / 15.0,
                                       1e-8, "abs 1e-8"));
    qs.push_back(quantity("central_charge_lambda_" + fmt("%g", lambda), c.c_recovered, 0, 1,
                          "blocks", "central_charge", lambda));
  }
  r.seconds = t.seconds();
  return r;
}

CriterionResult criterion5() {
  Timer t;
  CriterionResult r;
  r.index = 5;
  r.name = "count assemblies vs exact Poisson generating function";
  using corr::ToyAtom;
  struct System {
    std::vector<ToyAtom> atoms;
    int n;
    std::vector<std::vector<int>> ks;
  };
  const std::vector<System> systems = {
      {{{0.7, 0b1, false}}, 1, {{1}, {2}, {3}, {6}}},
      {{{0.5, 0b01, false}, {0.8, 0b10, false}, {0.3, 0b11, false}},
       2,
       {{1, 1}, {2, 1}, {2, 2}, {3, 3}}},
      {{{0.4, 0b011, false}, {0.6, 0b110, false}, {0.2, 0b111, false}, {0.9, 0b100, false}},
       3,
       {{1, 1, 1}, {2, 1, 1}, {2, 2, 2}, {1, 2, 3}}},
      {{{0.3, 0b0011, false}, {0.5, 0b1100, false}, {0.7, 0b1111, false}, {0.25, 0b0110, false}},
       4,
       {{1, 1, 1, 1}, {2, 1, 1, 2}, {1, 2, 2, 1}}},
  };
  double worst = 0;
  int cases = 0;
  for (double lambda : {0.7, 2.0}) {
    for (const auto& sys : systems) {
      const auto mass = [&](std::uint32_t s) { return corr::toy_mass(sys.atoms, s); };
      for (const auto& k : sys.ks) {
        const double oracle = corr::toy_poisson_oracle(sys.atoms, lambda, k);
        const bool all_ones = std::all_of(k.begin(), k.end(), [](int v) { return v == 1; });
        const double got = all_ones && sys.n >= 2
                               ? corr::npoint_edge_raw(mass, lambda, sys.n)
                               : corr::npoint_higher_raw(mass, lambda, k);
        worst = std::max(worst, std::fabs(got - oracle) / std::max(1.0, std::fabs(oracle)));
        ++cases;
        if (all_ones && sys.n >= 2) {
          // The multiset route must agree with the partition route on k = (1..1).
          const double alt = corr::npoint_higher_raw(mass, lambda, k);
          worst = std::max(worst, std::fabs(alt - oracle) / std::max(1.0, std::fabs(oracle)));
          ++cases;
        }
      }
    }
  }
  // Twisted assembly against the tilted generating function.
  const std::vector<ToyAtom> tw = {
      {0.5, 0b01, true}, {0.8, 0b10, false}, {0.3, 0b11, true}, {0.45, 0b11, false}};
  for (double lambda : {0.7, 2.0}) {
    for (double beta : {0.9, M_PI}) {
      const double oracle = corr::toy_poisson_oracle(tw, lambda, {1, 1}, true, beta);
      const double got = corr::npoint_edge_twisted_raw(
          [&](std::uint32_t s) { return corr::toy_mass(tw, s); },
          [&](std::uint32_t s) { return corr::toy_mass(tw, s, true); }, lambda, std::cos(beta), 2);
      worst = std::max(worst, std::fabs(got - oracle) / std::max(1.0, std::fabs(oracle)));
      ++cases;
    }
  }
  r.checks.push_back(make_comparison(
      "worst relative deviation over " + std::to_string(cases) + " assembly cases", worst, 0.0,
      1e-12, "rel 1e-12"));
  r.seconds = t.seconds();
  return r;
}

CriterionResult criterion6() {
  Timer t;
  CriterionResult r;
  r.index = 6;
  r.name = "Gram-projector blocks vs descent-equation blocks";
  struct Case {
    double c, hp, h1, h2, h3, h4;
  };
  const std::vector<Case> cases = {
      {2.0, 0.37, 0.21, 0.73, 1.0 / 3.0, 0.58},
      {1.0, 1.10, 0.40, 0.90, 0.35, 0.27},
      {2.6, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.4, 0.4},
      // Vacuum cases need pairwise-equal externals: the identity channel of an
      // unequal pair vanishes and the descent recursion is inconsistent.
      {2.0, 0.0, 0.21, 0.21, 0.58, 0.58},
      {1.37, 0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
  };
  double worst = 0;
  for (const auto& k : cases) {
    const auto a = vir::block_coeffs(k.c, k.hp, k.h1, k.h2, k.h3, k.h4, 4);
    const auto b = vir::block_coeffs_descent(k.c, k.hp, k.h1, k.h2, k.h3, k.h4, 4);
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
  }
  r.checks.push_back(make_comparison("max |Gram - descent| over coefficients to level 4", worst,
                                     0.0, 1e-10, "abs 1e-10"));
  r.seconds = t.seconds();
  return r;
}

// ---------------------------------------------------------------------------
// Sampled criteria

CriterionResult criterion7(std::uint64_t seed, double scale, std::vector<QuantityResult>& qs) {
  Timer t;
  CriterionResult r;
  r.index = 7;
  r.name = "edge two-point exponent in the pair distance";
  // One rung per separation r with eps_r = 0.08 r and the window scaled as r^2;
  // the windowed estimand then transforms exactly under scaling and the fitted
  // slope is -4/3 up to sampling noise alone.
  const std::vector<double> seps = {0.25, 0.5, 1.0};
  std::vector<double> lx, ly, sig;
  int stream = 70;
  for (double sep : seps) {
    corr::EstimatorConfig cfg;
    cfg.points = {cd{0, 0}, cd{sep, 0}};
    cfg.eps = 0.08 * sep;
    cfg.h = cfg.eps / 2;
    cfg.grid_res = cfg.eps / 4;
    cfg.window.t_min = 1e-4 * sep * sep;
    cfg.window.t_max = 8.0 * sep * sep;
    cfg.window.region = auto_region(cfg.points, cfg.window.t_max, 2 * cfg.eps + 4 * cfg.grid_res);
    cfg.n_samples = budget(4.5e7, scale);
    Rng rng(seed, stream++);
    corr::EventKey pair;
    pair.subset = 0b11;
    const auto alpha = corr::estimate_alpha(cfg, pair, rng);
    lx.push_back(std::log(sep));
    ly.push_back(std::log(alpha.value));
    sig.push_back(alpha.stderr_value / alpha.value);
    qs.push_back(quantity("edge_two_point_r_" + fmt("%g", sep), alpha.value, alpha.stderr_value,
                          alpha.n, "mc", "edge_two_point", sep));
    qs.push_back(quantity("edge_two_point_loglog_r_" + fmt("%g", sep), std::log(alpha.value),
                          sig.back(), alpha.n, "mc", "edge_two_point_loglog", lx.back()));
  }
  const auto fit = stats::fit_slope(lx, ly, sig);
  r.checks.push_back(make_comparison("log-log slope of the pair intensity", fit.slope,
                                     -4.0 / 3.0, 0.08, "abs 0.08"));
  r.note = "slope stderr " + fmt("%.4f", fit.slope_stderr);
  qs.push_back(quantity("edge_two_point_slope", fit.slope, fit.slope_stderr, seps.size(), "mc"));
  r.seconds = t.seconds();
  return r;
}

CriterionResult criterion8(std::uint64_t seed, double scale, std::vector<QuantityResult>& qs) {
  Timer t;
  CriterionResult r;
  r.index = 8;
  r.name = "single-disk hit exponent and ladder stability";
  // Independent runs per rung with h and the extraction cell tied to eps, so the
  // polyline undershoot rescales with the rung and drops out of ratios.
  const std::vector<double> ladder = {0.08, 0.04, 0.02};
  const std::vector<double> n_base = {5.6e6, 8.8e6, 1.4e7};
  const double delta0 = 0.4;
  std::vector<stats::Estimate> alphas;
  std::vector<double> lx, ly, sig;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    corr::EstimatorConfig cfg;
    cfg.points = {cd{0, 0}};
    cfg.eps = ladder[i];
    cfg.h = cfg.eps / 3;
    cfg.grid_res = cfg.eps / 5;
    cfg.delta0 = delta0;
    cfg.window.t_min = 1e-3;
    cfg.window.t_max = 0.64;
    cfg.window.region = auto_region(cfg.points, cfg.window.t_max, 2 * cfg.eps + 4 * cfg.grid_res);
    cfg.n_samples = budget(n_base[i], scale);
    Rng rng(seed, 80 + int(i));
    corr::EventKey single;
    single.subset = 0b1;
    const auto mass = corr::estimate_event_mass(cfg, single, rng);
    const auto alpha = mass.scaled(std::pow(cfg.eps, -2.0 / 3.0));
    alphas.push_back(alpha);
    lx.push_back(std::log(cfg.eps));
    ly.push_back(std::log(mass.value));
    sig.push_back(mass.stderr_value / mass.value);
    qs.push_back(quantity("single_disk_alpha_eps_" + fmt("%g", cfg.eps), alpha.value,
                          alpha.stderr_value, alpha.n, "mc", "single_disk_alpha", cfg.eps));
  }
  for (std::size_t i = 0; i + 1 < alphas.size(); ++i) {
    const double comb = std::hypot(alphas[i].stderr_value, alphas[i + 1].stderr_value);
    r.checks.push_back(make_comparison("ladder stability, rungs " + fmt("%g", ladder[i]) + " vs " +
                                           fmt("%g", ladder[i + 1]),
                                       alphas[i].value, alphas[i + 1].value, 3.0 * comb,
                                       "3 sigma combined"));
  }
  const auto fit = stats::fit_slope(lx, ly, sig);
  r.checks.push_back(
      make_comparison("raw mass exponent in eps", fit.slope, 2.0 / 3.0, 0.05, "abs 0.05"));
  r.note = "exponent stderr " + fmt("%.4f", fit.slope_stderr);
  qs.push_back(quantity("single_disk_exponent", fit.slope, fit.slope_stderr, ladder.size(), "mc"));
  r.seconds = t.seconds();
  return r;
}

CriterionResult criterion9(std::uint64_t seed, double scale, std::vector<QuantityResult>& qs) {
  Timer t;
  CriterionResult r;
  r.index = 9;
  r.name = "pair intensity covariance under doubling";
  // The doubled geometry doubles every length (eps, h, cell, region) and
  // multiplies the duration window by 4, so the two windowed estimands are
  // exact scale images and differ by 2^{-4/3} in expectation.
  const auto run = [&](double s, int stream) {
    corr::EstimatorConfig cfg;
    cfg.points = {cd{0, 0}, cd{0.5 * s, 0}};
    cfg.eps = 0.04 * s;
    cfg.h = cfg.eps / 2;
    cfg.grid_res = cfg.eps / 4;
    cfg.window.t_min = 2e-4 * s * s;
    cfg.window.t_max = 2.0 * s * s;
    cfg.window.region = auto_region(cfg.points, cfg.window.t_max, 2 * cfg.eps + 4 * cfg.grid_res);
    cfg.n_samples = budget(1.8e7, scale);
    Rng rng(seed, stream);
    corr::EventKey pair;
    pair.subset = 0b11;
    return corr::estimate_alpha(cfg, pair, rng);
  };
  const auto base = run(1.0, 90);
  const auto doubled = run(2.0, 91);
  const double factor = std::pow(2.0, -4.0 / 3.0);
  const auto mapped = base.scaled(factor);
  const double comb = std::hypot(doubled.stderr_value, mapped.stderr_value);
  r.checks.push_back(make_comparison("alpha(2z) vs 2^{-4/3} alpha(z)", doubled.value, mapped.value,
                                     3.0 * comb, "3 sigma combined"));
  qs.push_back(quantity("pair_alpha_base", base.value, base.stderr_value, base.n, "mc",
                        "scaling_covariance", 1.0));
  qs.push_back(quantity("pair_alpha_doubled", doubled.value, doubled.stderr_value, doubled.n, "mc",
                        "scaling_covariance", 2.0));
  r.seconds = t.seconds();
  return r;
}

// Criterion 10 plus the flagged half-weight hypothesis ratios, which reuse the
// same proposal stream: hypotheses out-param gets the observational entry.
CriterionResult criterion10(std::uint64_t seed, double scale, std::vector<QuantityResult>& qs,
                            CriterionResult& hypotheses) {
  Timer t;
  CriterionResult r;
  r.index = 10;
  r.name = "calibrated three-point estimate vs closed form";
  const double lambda = 1.0, beta = M_PI;
  const cd z1{0, 0}, z2{1, 0}, z3{0.6, 0.45};

  corr::EstimatorConfig cfg;
  cfg.points = {z1, z2, z3};
  cfg.eps = 0.04;
  cfg.h = cfg.eps / 2;
  cfg.grid_res = cfg.eps / 4;
  cfg.window.t_min = 1e-4;
  cfg.window.t_max = 12.0;
  cfg.window.region = auto_region(cfg.points, cfg.window.t_max, 2 * cfg.eps + 4 * cfg.grid_res);
  cfg.n_samples = budget(4.5e7, scale);

  corr::EventKey sep3, pair_hit, pair_sep, h0c1, hug0, h1c0, hug1;
  sep3.subset = 0b100;
  sep3.sep_a = 0;
  sep3.sep_b = 1;
  pair_hit.subset = 0b011;
  pair_sep.subset = 0b011;
  pair_sep.sep_a = 0;
  pair_sep.sep_b = 1;
  h0c1.subset = 0b001;
  h0c1.cover = 1;
  hug0 = h0c1;
  hug0.avoid = 0;
  h1c0.subset = 0b010;
  h1c0.cover = 0;
  hug1 = h1c0;
  hug1.avoid = 1;

  Rng rng(seed, 100);
  const auto est = corr::estimate_events(
      cfg, {sep3, pair_hit, pair_sep, h0c1, hug0, h1c0, hug1}, rng);
  const auto& m_sep3 = est[0];
  const auto& m_pair = est[1];

  // Calibration from the in-run pair mass: chat^2 eps^{-4/3} m_pair = |z12|^{-4/3}.
  // Window truncation and the polyline disk undershoot enter chat and the
  // three-point mass through the same factors and cancel in the product.
  const double target = std::pow(std::abs(z1 - z2), -4.0 / 3.0);
  const double chat = std::sqrt(target / (std::pow(cfg.eps, -4.0 / 3.0) * m_pair.value));
  const double chat_rel = 0.5 * m_pair.stderr_value / m_pair.value;

  const double mc = -std::sqrt(lambda) * (1.0 - std::cos(beta)) * chat *
                    std::pow(cfg.eps, -2.0 / 3.0) * m_sep3.value;
  const double mc_rel =
      std::hypot(chat_rel, m_sep3.stderr_value / m_sep3.value);
  const double mc_se = std::fabs(mc) * mc_rel;
  const double exact =
      cft::c_E_OO(lambda, beta) * std::pow(std::abs((z1 - z2) / ((z1 - z3) * (z2 - z3))), 2.0 / 3.0);

  r.checks.push_back(
      make_comparison("<O_pi O_-pi E> MC vs closed form", mc, exact, 3.0 * mc_se, "3 sigma"));
  r.checks.push_back(make_comparison("relative stderr of the MC estimate", mc_rel, 0.0, 0.05,
                                     "<= 5e-2"));
  r.note = "chat " + fmt("%.4f", chat) + ", MC rel stderr " + fmt("%.4f", mc_rel);
  qs.push_back(quantity("three_point_mc", mc, mc_se, m_sep3.n, "mc"));
  qs.push_back(quantity("three_point_exact", exact, 0, 1, "exact"));
  qs.push_back(quantity("chat_calibration", chat, chat * chat_rel, m_pair.n, "mc"));

  hypotheses.index = 0;
  hypotheses.name = "half-weight identities (flagged hypotheses, never gate)";
  const auto flag = [&](const std::string& name, const stats::Estimate& num,
                        const stats::Estimate& den, const std::string& qname) {
    const auto ratio = nested_ratio(num, den);
    hypotheses.checks.push_back(make_comparison(name, ratio.value, 0.5,
                                                3.0 * ratio.stderr_value,
                                                "3 sigma (flagged)", false));
    qs.push_back(quantity(qname, ratio.value, ratio.stderr_value, ratio.n, "mc", "hypotheses"));
  };
  flag("separating fraction of the pair mass", est[2], est[1], "sep_fraction_pair");
  flag("avoiding fraction of hit-0 cover-1 mass", est[4], est[3], "hug_fraction_0");
  flag("avoiding fraction of hit-1 cover-0 mass", est[6], est[5], "hug_fraction_1");
  hypotheses.note = "finite-eps ratios at eps = 0.04, |z12| = 1";
  r.seconds = t.seconds();
  return r;
}

CriterionResult criterion11(std::uint64_t seed, double scale, std::vector<QuantityResult>& qs) {
  Timer t;
  CriterionResult r;
  r.index = 11;
  r.name = "soup-level vs table-level pair intensity";
  // Both estimators target the identical windowed discretized estimand: same
  // points, eps, boundary cutoff, bridge step, cell size, window and region.
  const double lambda = 1.0, eps = 0.08, sep = 0.35;
  const std::vector<cd> points = {cd{0, 0}, cd{sep, 0}};
  sim::MeasureWindow window;
  window.t_min = (eps / 6.0) * (eps / 6.0);
  window.t_max = 0.16;
  const double margin = 2 * eps + 4 * (eps / 4);
  window.region = auto_region(points, window.t_max, margin);

  corr::SoupConfig sc;
  sc.points = points;
  sc.window = window;
  sc.lambda = lambda;
  sc.eps = eps;
  sc.delta = eps;
  sc.h = eps / 2;
  sc.grid_res = eps / 4;
  sc.margin = margin;
  sc.n_realizations = budget(2e4, scale);
  sc.centering_samples = budget(2e6, scale);
  Rng soup_rng(seed, 110);
  const auto soup = corr::soup_estimate_npoint(sc, soup_rng);

  corr::EstimatorConfig ec;
  ec.points = points;
  ec.window = window;
  ec.eps = eps;
  ec.h = sc.h;
  ec.grid_res = sc.grid_res;
  ec.delta0 = eps;
  ec.n_samples = budget(3e7, scale);
  Rng table_rng(seed, 111);
  corr::EventKey pair;
  pair.subset = 0b11;
  const auto mass = corr::estimate_event_mass(ec, pair, table_rng);
  const auto table_side = mass.scaled(lambda);

  const double comb = std::hypot(soup.product_mean.stderr_value, table_side.stderr_value);
  r.checks.push_back(make_comparison("centered pair product vs lambda * pair mass",
                                     soup.product_mean.value, table_side.value, 3.0 * comb,
                                     "3 sigma combined"));
  r.note = "soup rel stderr " +
           fmt("%.4f", soup.product_mean.stderr_value / std::fabs(soup.product_mean.value)) +
           ", table rel stderr " + fmt("%.4f", table_side.stderr_value / table_side.value);
  qs.push_back(quantity("cross_soup_product", soup.product_mean.value,
                        soup.product_mean.stderr_value, soup.product_mean.n, "mc"));
  qs.push_back(
      quantity("cross_table_mass", table_side.value, table_side.stderr_value, table_side.n, "mc"));
  r.seconds = t.seconds();
  return r;
}

CriterionResult criterion12(std::uint64_t seed, double scale, std::vector<QuantityResult>& qs,
                            std::vector<std::pair<std::string, std::string>>& artifacts) {
  Timer t;
  CriterionResult r;
  r.index = 12;
  r.name = "three-arm probability scaling on the triangular lattice";
  const std::vector<int> inner = {8, 16, 32, 64};
  const int outer = 1024;
  std::uint64_t mix = seed;
  const auto ladder = perc::arm_ladder(inner, outer, budget(1e4, scale), splitmix64(mix) ^ 120);
  const auto* p16 = &ladder[1];
  const auto* p32 = &ladder[2];
  // Shared configurations make the rung estimates positively correlated; the
  // quoted ratio error treats them as independent and so overstates itself.
  const double ratio = p32->theta.value / p16->theta.value;
  const double ratio_se =
      ratio * std::hypot(p32->theta.stderr_value / p32->theta.value,
                         p16->theta.stderr_value / p16->theta.value);
  const double want = std::pow(2.0, 2.0 / 3.0);
  r.checks.push_back(
      make_comparison("theta(32/R) / theta(16/R)", ratio, want, 0.10 * want, "rel 10%"));
  const auto fit = perc::fit_arm_exponent(ladder);
  r.checks.push_back(make_comparison("fitted arm exponent", fit.slope, 2.0 / 3.0, 0.07,
                                     "abs 0.07"));
  r.note = "ratio stderr " + fmt("%.4f", ratio_se) + ", exponent stderr " +
           fmt("%.4f", fit.slope_stderr);
  for (const auto& p : ladder)
    qs.push_back(quantity("three_arm_theta_r_" + std::to_string(p.inner_radius), p.theta.value,
                          p.theta.stderr_value, p.theta.n, "mc", "three_arm_theta",
                          p.inner_radius, p.outer_radius));
  qs.push_back(quantity("three_arm_ratio", ratio, ratio_se, p16->theta.n, "mc"));
  qs.push_back(quantity("three_arm_exponent", fit.slope, fit.slope_stderr, ladder.size(), "mc"));
  artifacts.emplace_back("three_arm_ladder.csv", perc::to_csv(ladder));
  r.seconds = t.seconds();
  return r;
}

}  // namespace

bool CriterionResult::pass() const {
  for (const auto& c : checks)
    if (c.gating && !c.pass) return false;
  return true;
}

bool VerifyReport::pass() const {
  for (const auto& c : criteria)
    if (!c.pass()) return false;
  return true;
}

std::string VerifyReport::format() const {
  std::string out;
  int gated = 0, passed = 0;
  for (const auto& c : criteria) {
    char line[256];
    if (c.index > 0) {
      ++gated;
      if (c.pass()) ++passed;
      std::snprintf(line, sizeof line, "criterion %2d: %s  %s  [%zu checks, %.1f s]\n", c.index,
                    c.pass() ? "PASS" : "FAIL", c.name.c_str(), c.checks.size(), c.seconds);
    } else {
      std::snprintf(line, sizeof line, "observation : ----  %s  [%zu checks, %.1f s]\n",
                    c.name.c_str(), c.checks.size(), c.seconds);
    }
    out += line;
    for (const auto& k : c.checks) {
      if (k.gating && k.pass) continue;
      std::snprintf(line, sizeof line, "    %s %s: value %.10g vs %.10g, |diff| %.3g, tol %.3g (%s)\n",
                    k.gating ? "FAIL" : "flag", k.name.c_str(), k.lhs, k.rhs,
                    std::fabs(k.lhs - k.rhs), k.tolerance, k.tolerance_spec.c_str());
      out += line;
    }
    if (!c.note.empty()) out += "    note: " + c.note + "\n";
  }
  char tail[64];
  std::snprintf(tail, sizeof tail, "overall: %s (%d/%d criteria)\n", pass() ? "PASS" : "FAIL",
                passed, gated);
  out += tail;
  return out;
}

VerifyReport verify_quick() {
  VerifyReport rep;
  rep.criteria.push_back(criterion1());
  rep.criteria.push_back(criterion2());
  rep.criteria.push_back(criterion3(rep.quantities));
  rep.criteria.push_back(criterion4(rep.quantities));
  rep.criteria.push_back(criterion5());
  rep.criteria.push_back(criterion6());
  return rep;
}

VerifyReport verify_full(std::uint64_t seed, double budget_scale) {
  if (!(budget_scale > 0)) throw std::invalid_argument("verify_full: budget_scale must be > 0");
  VerifyReport rep = verify_quick();
  rep.criteria.push_back(criterion7(seed, budget_scale, rep.quantities));
  rep.criteria.push_back(criterion8(seed, budget_scale, rep.quantities));
  rep.criteria.push_back(criterion9(seed, budget_scale, rep.quantities));
  CriterionResult hypotheses;
  rep.criteria.push_back(criterion10(seed, budget_scale, rep.quantities, hypotheses));
  rep.criteria.push_back(criterion11(seed, budget_scale, rep.quantities));
  rep.criteria.push_back(criterion12(seed, budget_scale, rep.quantities, rep.artifacts));
  rep.criteria.push_back(hypotheses);
  return rep;
}

}  // namespace bls::harness
