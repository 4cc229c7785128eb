#include "bls/harness/runner.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <stdexcept>

#include "bls/correlators.hpp"
#include "bls/exactcft.hpp"
#include "bls/harness/verify.hpp"
#include "bls/loopmeasure.hpp"
#include "bls/percolation.hpp"
#include "bls/rng.hpp"
#include "bls/stats.hpp"
#include "bls/virblocks.hpp"

namespace bls::harness {
namespace {

using cd = std::complex<double>;

std::string fmt_g(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::uint64_t scaled_budget(std::uint64_t base, double scale) {
  const double v = double(base) * scale;
  return v < 1.0 ? 1 : std::uint64_t(std::llround(v));
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

bool degenerate(const sim::Rect& r) { return !(r.xmax > r.xmin) || !(r.ymax > r.ymin); }

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

double min_pairwise_distance(const std::vector<cd>& points) {
  double d = 0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double v = std::abs(points[i] - points[j]);
      if (d == 0 || v < d) d = v;
    }
  return d;
}

// ---------------------------------------------------------------------------

void run_simulate(const ExperimentConfig& cfg, RunRecord& rec) {
  sim::MeasureWindow window;
  window.t_min = cfg.t_min;
  window.t_max = cfg.t_max;
  window.region = cfg.region;
  sim::DomainSpec domain;
  domain.window = cfg.region;
  const double res = cfg.grid_res > 0 ? cfg.grid_res : cfg.delta / 4;
  const double h = cfg.h > 0 ? cfg.h : cfg.delta / 4;

  Rng rng(cfg.seed, 1);
  stats::RunningStat loops, spin;
  const std::uint64_t n_real = scaled_budget(cfg.n_realizations, cfg.budget_scale);
  for (std::uint64_t i = 0; i < n_real; ++i) {
    const auto soup = sim::sample_soup(domain, window, cfg.lambda, cfg.delta, res, h, rng);
    loops.add(double(soup.loops.size()));
    double s = 0;
    for (auto v : soup.spins) s += v;
    spin.add(s);
  }
  rec.quantities.push_back(quantity("loops_per_realization", loops.mean, loops.stderr_mean(),
                                    loops.n, "mc"));
  rec.quantities.push_back(quantity("spin_sum_per_realization", spin.mean, spin.stderr_mean(),
                                    spin.n, "mc"));
  rec.quantities.push_back(quantity("window_mass", window.mass(), 0, 1, "exact"));
}

void run_estimate(const ExperimentConfig& cfg, RunRecord& rec) {
  const int n = int(cfg.points.size());
  const double dmin = min_pairwise_distance(cfg.points);
  std::vector<double> ladder = cfg.eps_ladder;
  if (ladder.empty()) {
    if (cfg.eps > 0) {
      ladder = {cfg.eps};
    } else {
      // Default rungs in units of the smallest pairwise distance.
      ladder = {0.08 * dmin, 0.04 * dmin, 0.02 * dmin};
    }
  }
  const double eps_fine = ladder.back();

  corr::EstimatorConfig ec;
  ec.points = cfg.points;
  ec.eps = eps_fine;
  ec.h = cfg.h > 0 ? cfg.h : eps_fine / 2;
  ec.grid_res = cfg.grid_res > 0 ? cfg.grid_res : eps_fine / 4;
  ec.delta0 = cfg.delta0;
  ec.window.t_min = cfg.t_min;
  ec.window.t_max = cfg.t_max;
  ec.window.region = degenerate(cfg.region)
                         ? auto_region(cfg.points, cfg.t_max, 2 * ladder.front() + 4 * ec.grid_res)
                         : cfg.region;
  ec.n_samples = scaled_budget(cfg.n_samples, cfg.budget_scale);

  // Event battery: every hit subset the assemblies consume; single disks only
  // when the boundary-diameter cutoff gives them a scale; the separating and
  // hug decorations that the charged two-point bracket needs.
  std::vector<corr::EventKey> events;
  const bool singles = cfg.delta0 > 0;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    const int bits = __builtin_popcount(mask);
    if (bits == 1 && !singles) continue;
    corr::EventKey k;
    k.subset = mask;
    events.push_back(k);
  }
  if (n == 2) {
    corr::EventKey sep;
    sep.subset = 0b11;
    sep.sep_a = 0;
    sep.sep_b = 1;
    events.push_back(sep);
    for (int j = 0; j < 2; ++j) {
      corr::EventKey hug;
      hug.subset = 1u << j;
      hug.cover = 1 - j;
      hug.avoid = j;
      events.push_back(hug);
    }
  }

  Rng rng(cfg.seed, 1);
  const auto grid = corr::estimate_events_ladder(ec, events, ladder, rng);

  // Calibration at the finest rung: chat^2 eps^{-4/3} m(pair 01) = |z0-z1|^{-4/3}.
  double chat = 1.0;
  bool normalized = false;
  if (n >= 2) {
    for (std::size_t e = 0; e < events.size(); ++e) {
      if (events[e].subset == 0b11 && events[e].sep_a < 0 && events[e].cover < 0) {
        const auto& m = grid.back()[e];
        if (m.value <= 0)
          throw corr::CalibrationFailure("estimate: pair mass vanished; cannot calibrate");
        chat = std::sqrt(std::pow(std::abs(cfg.points[0] - cfg.points[1]), -4.0 / 3.0) /
                         (std::pow(eps_fine, -4.0 / 3.0) * m.value));
        normalized = true;
        break;
      }
    }
  }

  corr::AlphaTable table;
  table.points = cfg.points;
  table.eps_ladder = ladder;
  table.chat = chat;
  table.lambda = cfg.lambda;
  table.normalized = normalized;
  table.config_hash = rec.config_hash;
  for (std::size_t ri = 0; ri < ladder.size(); ++ri) {
    for (std::size_t e = 0; e < events.size(); ++e) {
      corr::AlphaEntry entry;
      entry.key = events[e];
      entry.eps = ladder[ri];
      entry.raw_mass = grid[ri][e];
      const int k = events[e].hit_count();
      entry.alpha_hat = grid[ri][e].scaled(std::pow(chat, k) * std::pow(ladder[ri], -2.0 * k / 3.0));
      table.entries.push_back(entry);
      rec.quantities.push_back(quantity("alpha_" + events[e].label() + "_eps_" + fmt_g(ladder[ri]),
                                        entry.alpha_hat.value, entry.alpha_hat.stderr_value,
                                        entry.alpha_hat.n, "mc", "alpha_table", ladder[ri],
                                        double(events[e].subset)));
      if (n == 2 && events[e].subset == 0b11 && events[e].sep_a < 0) {
        rec.quantities.push_back(quantity("two_point_eps_" + fmt_g(ladder[ri]),
                                          entry.alpha_hat.value, entry.alpha_hat.stderr_value,
                                          entry.alpha_hat.n, "mc", "two_point_ladder", ladder[ri]));
        rec.quantities.push_back(quantity(
            "two_point_loglog_eps_" + fmt_g(ladder[ri]), std::log(entry.raw_mass.value),
            entry.raw_mass.stderr_value / entry.raw_mass.value, entry.raw_mass.n, "mc",
            "two_point_ladder_loglog", std::log(ladder[ri])));
      }
    }
  }
  rec.quantities.push_back(quantity("chat_calibration", chat, 0, grid.back().front().n, "mc"));

  if (normalized) {
    rec.quantities.push_back(quantity("edge_npoint", corr::npoint_edge_formula(table, n), 0,
                                      ec.n_samples, "mc"));
    if (n == 2 && cfg.beta != 0)
      rec.quantities.push_back(quantity("charged_two_point_bracket",
                                        corr::charged_two_point(table, cfg.beta), 0, ec.n_samples,
                                        "mc"));
  }
  rec.artifacts["alpha_table.json"] = corr::to_json(table);
}

void run_exact(const ExperimentConfig& cfg, RunRecord& rec) {
  const auto oc = cft::ope_constants(cfg.lambda, cfg.beta);
  const auto put = [&](const std::string& name, double v) {
    rec.quantities.push_back(quantity(name, v, 0, 1, "exact"));
  };
  put("central_charge", oc.central_charge);
  put("delta_layering", oc.delta_layering);
  put("delta_edge", oc.delta_edge);
  put("c_E_OO", oc.c_E_OO);
  put("c_E_EE", oc.c_E_EE);
  put("c_E2_EE", oc.c_E2_EE);
  put("c_E2_OO_sq", oc.c_E2_OO_sq);
  put("c_Ebeta_OE_sq", oc.c_Ebeta_OE_sq);
  put("k_ratio", oc.k_ratio);
  put("c_t", oc.c_t);
  put("c_g", oc.c_g);

  std::vector<cd> z = cfg.points;
  if (z.empty()) z = {cd{0, 0}, cd{1, 0}, cd{0.3, 0.6}, cd{1.4, 0.2}};
  const auto fp = cft::four_point_OOEE(cfg.lambda, cfg.beta, z[0], z[1], z[2], z[3]);
  put("four_point_OOEE", fp.value);
  put("four_point_sym_term", fp.sym_term);
  put("four_point_twist_term", fp.twist_term);
  put("four_point_sep_term", fp.sep_term);
  put("four_point_z_twist", fp.z_twist_value);
  put("cross_ratio_re", fp.cross_ratio.real());
  put("cross_ratio_im", fp.cross_ratio.imag());
}

void run_blocks(const ExperimentConfig& cfg, RunRecord& rec) {
  const auto table = vir::decompose_fourpoint(cfg.lambda, cfg.beta, cfg.kmax, cfg.max_p);
  for (const auto& e : table.entries) {
    rec.quantities.push_back(quantity(
        "spectrum_p" + std::to_string(e.p) + "_pb" + std::to_string(e.pbar), e.product, 0, 1,
        "blocks", "spectrum", e.p, e.pbar));
    rec.quantities.push_back(quantity(
        "residual_p" + std::to_string(e.p) + "_pb" + std::to_string(e.pbar), e.residual, 0, 1,
        "blocks", "spectrum_residual", e.p, e.pbar));
  }
  if (cfg.beta != 0) {
    const auto cc = vir::central_charge_check(cfg.lambda, cfg.beta);
    rec.quantities.push_back(quantity("central_charge_recovered", cc.c_recovered, 0, 1, "blocks"));
    rec.quantities.push_back(quantity("vacuum_level2_coeff", cc.raw_coeff, 0, 1, "blocks"));
  }
}

void run_perc(const ExperimentConfig& cfg, RunRecord& rec) {
  std::uint64_t mix = cfg.seed;
  const auto ladder =
      perc::arm_ladder(cfg.inner_radii, cfg.outer_radius,
                       scaled_budget(cfg.n_trials, cfg.budget_scale), splitmix64(mix) ^ 12,
                       cfg.swap_colors);
  for (const auto& p : ladder)
    rec.quantities.push_back(quantity("three_arm_theta_r_" + std::to_string(p.inner_radius),
                                      p.theta.value, p.theta.stderr_value, p.theta.n, "mc",
                                      "three_arm_theta", p.inner_radius, p.outer_radius));
  if (ladder.size() >= 3) {
    const auto fit = perc::fit_arm_exponent(ladder);
    rec.quantities.push_back(
        quantity("three_arm_exponent", fit.slope, fit.slope_stderr, ladder.size(), "mc"));
  }
  rec.artifacts["three_arm_ladder.csv"] = perc::to_csv(ladder);
}

void run_verify(const ExperimentConfig& cfg, RunRecord& rec) {
  const VerifyReport report = cfg.verify_mode == "full"
                                  ? verify_full(cfg.seed, cfg.budget_scale)
                                  : verify_quick();
  rec.quantities = report.quantities;
  for (const auto& c : report.criteria) {
    const std::string prefix =
        c.index > 0 ? "criterion " + std::to_string(c.index) + ": " : "observation: ";
    for (auto check : c.checks) {
      check.name = prefix + check.name;
      rec.comparisons.push_back(check);
    }
  }
  for (const auto& [name, payload] : report.artifacts) rec.artifacts[name] = payload;
  rec.artifacts["verify_report.txt"] = report.format();
}

const QuantityResult* find_quantity(const std::vector<QuantityResult>& qs,
                                    const std::string& name) {
  for (const auto& q : qs)
    if (q.name == name) return &q;
  return nullptr;
}

}  // namespace

std::vector<Comparison> build_comparisons(const ExperimentConfig& cfg,
                                          const std::vector<QuantityResult>& quantities) {
  std::vector<Comparison> out;
  if (cfg.command == "exact") {
    const auto* v = find_quantity(quantities, "four_point_OOEE");
    const auto* a = find_quantity(quantities, "four_point_sym_term");
    const auto* b = find_quantity(quantities, "four_point_twist_term");
    const auto* c = find_quantity(quantities, "four_point_sep_term");
    if (v && a && b && c)
      out.push_back(make_comparison("four-point equals its term sum", v->value,
                                    a->value + b->value + c->value, 1e-12, "abs 1e-12"));
  } else if (cfg.command == "blocks") {
    const auto* cc = find_quantity(quantities, "central_charge_recovered");
    if (cc)
      out.push_back(make_comparison("recovered central charge vs 2 lambda", cc->value,
                                    2.0 * cfg.lambda, 1e-8, "abs 1e-8"));
  } else if (cfg.command == "perc") {
    const auto* s = find_quantity(quantities, "three_arm_exponent");
    if (s)
      out.push_back(make_comparison("arm exponent vs 2/3 (informational)", s->value, 2.0 / 3.0,
                                    3.0 * s->stderr_value, "3 sigma (flagged)", false));
  } else if (cfg.command == "estimate") {
    // Ladder-consistency flags: adjacent rungs of the normalized two-point.
    std::vector<const QuantityResult*> rungs;
    for (const auto& q : quantities)
      if (q.series == "two_point_ladder") rungs.push_back(&q);
    for (std::size_t i = 0; i + 1 < rungs.size(); ++i) {
      const double comb = std::hypot(rungs[i]->stderr_value, rungs[i + 1]->stderr_value);
      out.push_back(make_comparison(
          "ladder consistency " + fmt_g(rungs[i]->x) + " vs " + fmt_g(rungs[i + 1]->x),
          rungs[i]->value, rungs[i + 1]->value, 3.0 * comb, "3 sigma (flagged)", false));
    }
  }
  return out;
}

RunRecord run_experiment(const ExperimentConfig& cfg) {
  RunRecord rec;
  rec.command = cfg.command;
  rec.config_json = to_canonical_json(cfg);
  rec.config_hash = config_hash(cfg);
  rec.started_at = iso_timestamp_utc();

  if (cfg.command == "simulate") {
    run_simulate(cfg, rec);
  } else if (cfg.command == "estimate") {
    run_estimate(cfg, rec);
  } else if (cfg.command == "exact") {
    run_exact(cfg, rec);
  } else if (cfg.command == "blocks") {
    run_blocks(cfg, rec);
  } else if (cfg.command == "perc") {
    run_perc(cfg, rec);
  } else if (cfg.command == "verify") {
    run_verify(cfg, rec);
  } else {
    throw ConfigError("unknown command '" + cfg.command + "'");
  }

  if (cfg.command != "verify") {
    const auto derived = build_comparisons(cfg, rec.quantities);
    rec.comparisons.insert(rec.comparisons.end(), derived.begin(), derived.end());
  }
  rec.pass = true;
  for (const auto& c : rec.comparisons)
    if (c.gating && !c.pass) rec.pass = false;
  rec.finished_at = iso_timestamp_utc();
  return rec;
}

bool reverify(const RunRecord& record) {
  ExperimentConfig cfg;
  try {
    cfg = config_from_json(record.config_json);
  } catch (const ConfigError&) {
    return false;
  }
  if (config_hash(cfg) != record.config_hash) return false;
  bool pass = true;
  for (const auto& c : record.comparisons) {
    const bool ok =
        std::isfinite(c.lhs) && std::isfinite(c.rhs) && std::fabs(c.lhs - c.rhs) <= c.tolerance;
    if (ok != c.pass) return false;
    if (c.gating && !ok) pass = false;
  }
  return pass == record.pass;
}

std::string default_record_filename(const RunRecord& record) {
  return record.command + "_" + record.config_hash + ".json";
}

}  // namespace bls::harness
