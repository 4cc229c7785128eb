#include "bls/correlators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "bls/kernels.hpp"
#include "json.hpp"

namespace bls::corr {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double b = 1.0;
  for (int i = 0; i < k; ++i) b = b * (n - i) / (i + 1);
  return b;
}
}  // namespace

// ---------------------------------------------------------------------------
// Combinatorics

namespace {
void partitions_rec(std::uint32_t rem, std::vector<std::uint32_t>& cur,
                    std::vector<std::vector<std::uint32_t>>& out) {
  if (rem == 0) {
    out.push_back(cur);
    return;
  }
  const int lowest = std::countr_zero(rem);
  const std::uint32_t rest = rem & (rem - 1);
  // The block containing the lowest element is {lowest} + a nonempty submask.
  for (std::uint32_t sub = rest; sub != 0; sub = (sub - 1) & rest) {
    const std::uint32_t block = sub | (1u << lowest);
    cur.push_back(block);
    partitions_rec(rem & ~block, cur, out);
    cur.pop_back();
  }
}

std::vector<std::vector<std::uint32_t>> partitions_of_mask(std::uint32_t mask) {
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::uint32_t> cur;
  partitions_rec(mask, cur, out);
  return out;
}
}  // namespace

std::vector<std::vector<std::uint32_t>> partitions_min2(int n) {
  if (n < 0 || n > 16) throw std::invalid_argument("partitions_min2: n must be in [0, 16]");
  if (n == 0) return {{}};
  return partitions_of_mask((1u << n) - 1);
}

namespace {
void multiset_rec(const std::vector<std::uint32_t>& masks, std::size_t idx, std::vector<int>& rem,
                  int rem_total, SubsetMultiset& cur, std::vector<SubsetMultiset>& out) {
  if (rem_total == 0) {
    out.push_back(cur);
    return;
  }
  if (idx == masks.size()) return;
  std::uint32_t later = 0;
  for (std::size_t i = idx; i < masks.size(); ++i) later |= masks[i];
  for (std::size_t j = 0; j < rem.size(); ++j)
    if (rem[j] > 0 && ((later >> j) & 1u) == 0) return;

  const std::uint32_t m = masks[idx];
  int cap = rem_total;
  for (std::size_t j = 0; j < rem.size(); ++j)
    if ((m >> j) & 1u) cap = std::min(cap, rem[j]);
  const int bits = std::popcount(m);
  for (int mult = 0; mult <= cap; ++mult) {
    if (mult > 0) {
      for (std::size_t j = 0; j < rem.size(); ++j)
        if ((m >> j) & 1u) rem[j] -= 1;
      if (mult == 1) cur.emplace_back(m, 1);
      else cur.back().second = mult;
    }
    multiset_rec(masks, idx + 1, rem, rem_total - mult * bits, cur, out);
  }
  if (cap > 0) {
    cur.pop_back();
    for (std::size_t j = 0; j < rem.size(); ++j)
      if ((m >> j) & 1u) rem[j] += cap;
  }
}
}  // namespace

std::vector<SubsetMultiset> multisets_with_multiplicity(const std::vector<int>& k) {
  const int n = static_cast<int>(k.size());
  if (n < 1 || n > 16) throw std::invalid_argument("multisets_with_multiplicity: need 1..16 points");
  int total = 0;
  for (int kj : k) {
    if (kj < 0) throw std::invalid_argument("multisets_with_multiplicity: negative multiplicity");
    total += kj;
  }
  if (total > 32) throw std::invalid_argument("multisets_with_multiplicity: sum of k exceeds 32");

  std::vector<std::uint32_t> masks;
  for (std::uint32_t m = 0; m < (1u << n); ++m)
    if (std::popcount(m) >= 2) masks.push_back(m);
  std::vector<SubsetMultiset> out;
  std::vector<int> rem = k;
  SubsetMultiset cur;
  multiset_rec(masks, 0, rem, total, cur, out);
  return out;
}

// ---------------------------------------------------------------------------
// Events

int EventKey::hit_count() const { return std::popcount(subset); }

bool EventKey::operator==(const EventKey& o) const {
  return subset == o.subset && sep_a == o.sep_a && sep_b == o.sep_b && cover == o.cover &&
         avoid == o.avoid;
}

std::string EventKey::label() const {
  std::string s = "hit{";
  bool first = true;
  for (int j = 0; j < 32; ++j)
    if ((subset >> j) & 1u) {
      if (!first) s += ',';
      s += std::to_string(j);
      first = false;
    }
  s += '}';
  if (sep_a >= 0) s += "|sep(" + std::to_string(sep_a) + "," + std::to_string(sep_b) + ")";
  if (cover >= 0) s += "|cover" + std::to_string(cover);
  if (avoid >= 0) s += "|avoid" + std::to_string(avoid);
  return s;
}

namespace {

double effective_resolution(double side, double grid_res, int grid_cap) {
  return std::max(grid_res, side / double(grid_cap - 8));
}

struct PointGates {
  bool hit_plausible = false;  // path distance <= eps + 3 * res_eff
  bool enclosable = false;     // inside the padded path bounding box
};

void validate_config(const EstimatorConfig& cfg, double eps) {
  if (cfg.points.empty()) throw std::invalid_argument("estimator: no query points");
  if (cfg.points.size() > 16) throw std::invalid_argument("estimator: too many query points");
  if (!(eps > 0)) throw std::invalid_argument("estimator: eps must be positive");
  if (!(cfg.h > 0)) throw std::invalid_argument("estimator: h must be positive");
  if (!(cfg.grid_res > 0)) throw std::invalid_argument("estimator: grid_res must be positive");
  if (cfg.grid_cap < 64) throw std::invalid_argument("estimator: grid_cap too small");
  if (cfg.n_samples == 0) throw std::invalid_argument("estimator: n_samples must be positive");
  if (!(cfg.window.mass() > 0)) throw std::invalid_argument("estimator: window has zero mass");
  for (std::size_t i = 0; i < cfg.points.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.points.size(); ++j)
      if (std::abs(cfg.points[i] - cfg.points[j]) <= 2.0 * eps)
        throw std::invalid_argument("estimator: query points closer than 2 * eps");
}

void validate_event(const EstimatorConfig& cfg, const EventKey& ev) {
  const int np = static_cast<int>(cfg.points.size());
  if (ev.subset == 0) throw std::invalid_argument("estimator: event requires at least one hit");
  if (ev.subset >> np) throw std::invalid_argument("estimator: subset index out of range");
  if ((ev.sep_a >= 0) != (ev.sep_b >= 0))
    throw std::invalid_argument("estimator: separation needs two points");
  for (int idx : {ev.sep_a, ev.sep_b, ev.cover, ev.avoid})
    if (idx >= np) throw std::invalid_argument("estimator: event index out of range");
  if (ev.sep_a >= 0 && ev.sep_a == ev.sep_b)
    throw std::invalid_argument("estimator: separation pair must be distinct");
  if (ev.cover >= 0 && ev.cover == ev.avoid)
    throw std::invalid_argument("estimator: cover and avoid clash");
  // Single-hit events need a scale that keeps extraction meaningful.
  if (ev.hit_count() == 1 && ev.cover < 0 && ev.sep_a < 0 && cfg.delta0 < 4.0 * cfg.grid_res)
    throw std::invalid_argument("estimator: single-disk event needs delta0 >= 4 * grid_res");
}

// Smallest loop extent compatible with the event, minus safety; bounds the
// proposal's duration floor from below.
double event_scale(const EstimatorConfig& cfg, const EventKey& ev, double eps) {
  double d = std::max(cfg.delta0, 0.0);
  std::vector<int> hits;
  for (int j = 0; j < 32; ++j)
    if ((ev.subset >> j) & 1u) hits.push_back(j);
  for (std::size_t a = 0; a < hits.size(); ++a)
    for (std::size_t b = a + 1; b < hits.size(); ++b)
      d = std::max(d, std::abs(cfg.points[hits[a]] - cfg.points[hits[b]]) - 2.0 * eps);
  auto reach = [&](int enclosed) {
    double best = 0;
    for (int j : hits)
      best = std::max(best, std::abs(cfg.points[enclosed] - cfg.points[j]) - eps);
    return best;
  };
  if (ev.cover >= 0) d = std::max(d, reach(ev.cover));
  if (ev.sep_a >= 0) d = std::max(d, std::min(reach(ev.sep_a), reach(ev.sep_b)));
  return std::max(d, 0.0);
}

}  // namespace

std::vector<std::vector<stats::Estimate>> estimate_events_ladder(
    const EstimatorConfig& cfg, const std::vector<EventKey>& events,
    const std::vector<double>& eps_ladder, Rng& rng) {
  if (eps_ladder.empty()) throw std::invalid_argument("estimator: empty eps ladder");
  for (std::size_t i = 0; i < eps_ladder.size(); ++i)
    if (!(eps_ladder[i] > 0) || (i > 0 && !(eps_ladder[i] < eps_ladder[i - 1])))
      throw std::invalid_argument("estimator: eps ladder must be positive and strictly decreasing");
  const double eps_max = eps_ladder.front();
  validate_config(cfg, eps_max);
  if (events.empty()) throw std::invalid_argument("estimate_events: no events");
  for (const auto& ev : events) validate_event(cfg, ev);

  const std::size_t np = cfg.points.size();
  const std::size_t nr = eps_ladder.size();
  std::vector<double> qx(np), qy(np);
  sim::Rect qbox{cfg.points[0].real(), cfg.points[0].real(), cfg.points[0].imag(),
                 cfg.points[0].imag()};
  for (std::size_t j = 0; j < np; ++j) {
    qx[j] = cfg.points[j].real();
    qy[j] = cfg.points[j].imag();
    qbox.xmin = std::min(qbox.xmin, qx[j]);
    qbox.xmax = std::max(qbox.xmax, qx[j]);
    qbox.ymin = std::min(qbox.ymin, qy[j]);
    qbox.ymax = std::max(qbox.ymax, qy[j]);
  }

  double d_batch = std::numeric_limits<double>::infinity();
  for (const auto& ev : events) d_batch = std::min(d_batch, event_scale(cfg, ev, eps_max));

  sim::TargetedProposal prop;
  prop.window = cfg.window;
  prop.query_bbox = qbox;
  // An extent >= d requires bridge range >= d / sqrt(t) in some direction; the
  // standard bridge range exceeds 6 with probability ~ 1e-29, so durations
  // below (d/6)^2 carry no event mass at any achievable precision.
  prop.t_floor = (d_batch / 6.0) * (d_batch / 6.0);
  prop.margin = 2.0 * eps_max + 4.0 * cfg.grid_res;

  std::vector<stats::RunningStat> acc(nr * events.size());
  std::vector<double> values(nr * events.size());
  std::vector<PointGates> gates(np);
  std::vector<double> pd2(np), bd2(np);
  std::vector<int> parity(np);
  sim::LoopSample sample;
  const auto& ops = kern::kernels();

  for (std::uint64_t it = 0; it < cfg.n_samples; ++it) {
    sim::sample_loop_targeted(prop, rng, cfg.h, sample);
    std::fill(values.begin(), values.end(), 0.0);

    double pb[4];
    ops.bbox(sample.xs.data(), sample.ys.data(), sample.xs.size(), pb);
    const double side = std::max(pb[1] - pb[0], pb[3] - pb[2]);
    const double diag = std::hypot(pb[1] - pb[0], pb[3] - pb[2]);
    const double res_eff = effective_resolution(side, cfg.grid_res, cfg.grid_cap);

    bool delta_plausible = !(cfg.delta0 > 0) || diag >= cfg.delta0;
    bool any_near = false;
    if (delta_plausible) {
      // The traced boundary can bulge up to two cells past the path bounding
      // box, so the enclosure gate keeps the same padding as the hit gate.
      const double pad = eps_max + 3.0 * res_eff;
      for (std::size_t j = 0; j < np; ++j) {
        gates[j] = PointGates{};
        gates[j].enclosable = qx[j] > pb[0] - pad && qx[j] < pb[1] + pad && qy[j] > pb[2] - pad &&
                              qy[j] < pb[3] + pad;
        if (gates[j].enclosable) any_near = true;
      }
    }

    bool any_feasible = false;
    if (delta_plausible && any_near) {
      ops.min_dist_sq(sample.xs.data(), sample.ys.data(), sample.xs.size(), qx.data(), qy.data(),
                      np, pd2.data());
      const double gate = eps_max + 3.0 * res_eff;
      for (std::size_t j = 0; j < np; ++j) gates[j].hit_plausible = pd2[j] <= gate * gate;
      for (const auto& ev : events) {
        bool ok = true;
        for (int j = 0; j < int(np) && ok; ++j)
          if ((ev.subset >> j) & 1u) ok = gates[j].hit_plausible;
        if (ok && ev.sep_a >= 0) ok = gates[ev.sep_a].enclosable || gates[ev.sep_b].enclosable;
        if (ok && ev.cover >= 0) ok = gates[ev.cover].enclosable;
        if (ok) {
          any_feasible = true;
          break;
        }
      }
    }

    if (any_feasible) {
      bool extracted = true;
      geom::SimpleLoop loop;
      try {
        loop = geom::outer_boundary(sample.xs, sample.ys, res_eff, cfg.grid_cap);
      } catch (const geom::DegenerateLoop&) {
        extracted = false;
      }
      if (extracted && (!(cfg.delta0 > 0) || loop.diameter >= cfg.delta0)) {
        ops.min_dist_sq(loop.xs.data(), loop.ys.data(), loop.xs.size(), qx.data(), qy.data(), np,
                        bd2.data());
        std::fill(parity.begin(), parity.end(), -1);
        auto par = [&](int j) {
          if (parity[j] < 0)
            parity[j] = gates[j].enclosable && geom::contains(loop, cfg.points[j]) ? 1 : 0;
          return parity[j];
        };
        for (std::size_t e = 0; e < events.size(); ++e) {
          const auto& ev = events[e];
          // Decorations are eps-independent; resolve them once, then thin the
          // hit indicator down the ladder.
          bool deco = true;
          if (ev.sep_a >= 0) deco = par(ev.sep_a) != par(ev.sep_b);
          if (deco && ev.cover >= 0) deco = par(ev.cover) == 1;
          if (deco && ev.avoid >= 0) deco = par(ev.avoid) == 0;
          if (!deco) continue;
          for (std::size_t r = 0; r < nr; ++r) {
            const double e2 = eps_ladder[r] * eps_ladder[r];
            bool ind = true;
            for (int j = 0; j < int(np) && ind; ++j)
              if ((ev.subset >> j) & 1u) ind = bd2[j] <= e2;
            if (!ind) break;
            values[r * events.size() + e] = sample.weight;
          }
        }
      }
    }

    for (std::size_t i = 0; i < acc.size(); ++i) acc[i].add(values[i]);
  }

  std::vector<std::vector<stats::Estimate>> out(nr, std::vector<stats::Estimate>(events.size()));
  for (std::size_t r = 0; r < nr; ++r)
    for (std::size_t e = 0; e < events.size(); ++e)
      out[r][e] = stats::Estimate::from_stat(acc[r * events.size() + e]);
  return out;
}

std::vector<stats::Estimate> estimate_events(const EstimatorConfig& cfg,
                                             const std::vector<EventKey>& events, Rng& rng) {
  return estimate_events_ladder(cfg, events, {cfg.eps}, rng).front();
}

stats::Estimate estimate_event_mass(const EstimatorConfig& cfg, const EventKey& event, Rng& rng) {
  return estimate_events(cfg, {event}, rng)[0];
}

stats::Estimate estimate_alpha(const EstimatorConfig& cfg, const EventKey& event, Rng& rng) {
  const stats::Estimate mass = estimate_event_mass(cfg, event, rng);
  return mass.scaled(std::pow(cfg.eps, -2.0 * event.hit_count() / 3.0));
}

ChatCalibration calibrate_chat(const EstimatorConfig& cfg, Rng& rng) {
  if (cfg.points.size() < 2) throw std::invalid_argument("calibrate_chat: need two points");
  EventKey pair;
  pair.subset = 0b11u;
  const stats::Estimate mass = estimate_event_mass(cfg, pair, rng);
  if (!(mass.value > 0) || !std::isfinite(mass.value))
    throw CalibrationFailure("calibrate_chat: nonpositive pair mass");
  const double r = std::abs(cfg.points[0] - cfg.points[1]);
  const stats::Estimate raw = mass.scaled(std::pow(cfg.eps, -4.0 / 3.0));
  ChatCalibration cal;
  cal.raw_alpha = raw;
  cal.eps = cfg.eps;
  // chat^2 * raw = r^{-4/3}
  cal.chat = std::sqrt(std::pow(r, -4.0 / 3.0) / raw.value);
  return cal;
}

// ---------------------------------------------------------------------------
// Alpha table

const AlphaEntry* AlphaTable::find(const EventKey& key, double eps) const {
  for (const auto& e : entries)
    if (e.key == key && e.eps == eps) return &e;
  return nullptr;
}

const AlphaEntry& AlphaTable::entry(const EventKey& key) const {
  if (eps_ladder.empty()) throw IncompleteTable("alpha table has no ladder");
  const double finest = *std::min_element(eps_ladder.begin(), eps_ladder.end());
  const AlphaEntry* e = find(key, finest);
  if (!e) throw IncompleteTable("alpha table is missing entry " + key.label());
  return *e;
}

double AlphaTable::alpha(const EventKey& key) const { return entry(key).alpha_hat.value; }

std::string to_json(const AlphaTable& table) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["kind"] = "alpha_table";
  j["lambda"] = table.lambda;
  j["chat"] = table.chat;
  j["normalized"] = table.normalized;
  j["config_hash"] = table.config_hash;
  j["points"] = nlohmann::json::array();
  for (const auto& p : table.points) j["points"].push_back({p.real(), p.imag()});
  j["eps_ladder"] = table.eps_ladder;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : table.entries) {
    nlohmann::json je;
    std::vector<int> subset;
    for (int b = 0; b < 32; ++b)
      if ((e.key.subset >> b) & 1u) subset.push_back(b);
    je["subset"] = subset;
    if (e.key.sep_a >= 0) je["sep"] = {e.key.sep_a, e.key.sep_b};
    if (e.key.cover >= 0) je["cover"] = e.key.cover;
    if (e.key.avoid >= 0) je["avoid"] = e.key.avoid;
    je["eps"] = e.eps;
    je["raw_mass"] = {{"value", e.raw_mass.value}, {"stderr", e.raw_mass.stderr_value}, {"n", e.raw_mass.n}};
    je["alpha_hat"] = {{"value", e.alpha_hat.value}, {"stderr", e.alpha_hat.stderr_value}, {"n", e.alpha_hat.n}};
    j["entries"].push_back(je);
  }
  return j.dump(2);
}

AlphaTable alpha_table_from_json(const std::string& json_text) {
  const nlohmann::json j = nlohmann::json::parse(json_text);
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
    throw std::runtime_error("alpha_table_from_json: unsupported schema version");
  if (j.value("kind", std::string{}) != "alpha_table")
    throw std::runtime_error("alpha_table_from_json: not an alpha table");
  AlphaTable t;
  t.lambda = j.at("lambda").get<double>();
  t.chat = j.at("chat").get<double>();
  t.normalized = j.at("normalized").get<bool>();
  t.config_hash = j.value("config_hash", std::string{});
  for (const auto& p : j.at("points")) t.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  t.eps_ladder = j.at("eps_ladder").get<std::vector<double>>();
  for (const auto& je : j.at("entries")) {
    AlphaEntry e;
    for (const auto& b : je.at("subset")) e.key.subset |= 1u << b.get<int>();
    if (je.contains("sep")) {
      e.key.sep_a = je["sep"].at(0).get<int>();
      e.key.sep_b = je["sep"].at(1).get<int>();
    }
    e.key.cover = je.value("cover", -1);
    e.key.avoid = je.value("avoid", -1);
    e.eps = je.at("eps").get<double>();
    auto load = [](const nlohmann::json& js) {
      stats::Estimate est;
      est.value = js.at("value").get<double>();
      est.stderr_value = js.at("stderr").get<double>();
      est.n = js.at("n").get<std::uint64_t>();
      return est;
    };
    e.raw_mass = load(je.at("raw_mass"));
    e.alpha_hat = load(je.at("alpha_hat"));
    t.entries.push_back(e);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Assemblies

double npoint_edge_raw(const std::function<double(std::uint32_t)>& mass, double lambda, int n) {
  double total = 0.0;
  for (const auto& partition : partitions_min2(n)) {
    double term = 1.0;
    for (std::uint32_t block : partition) term *= lambda * mass(block);
    total += term;
  }
  return total;
}

double npoint_higher_raw(const std::function<double(std::uint32_t)>& mass, double lambda,
                         const std::vector<int>& k) {
  double total = 0.0;
  for (const auto& mset : multisets_with_multiplicity(k)) {
    double term = 1.0;
    for (const auto& [m, mult] : mset)
      term *= std::pow(lambda * mass(m), mult) / factorial(mult);
    total += term;
  }
  double pref = 1.0;
  for (int kj : k) pref *= factorial(kj);
  return pref * total;
}

double npoint_edge_twisted_raw(const std::function<double(std::uint32_t)>& mass,
                               const std::function<double(std::uint32_t)>& mass_sep,
                               double lambda, double cos_beta, int n) {
  if (n < 0 || n > 16) throw std::invalid_argument("npoint_edge_twisted_raw: n out of range");
  const double tilt = 1.0 - cos_beta;
  auto tilted = [&](std::uint32_t s) { return mass(s) - tilt * mass_sep(s); };
  const std::uint32_t full = n == 0 ? 0u : (1u << n) - 1;
  double total = 0.0;
  // Centered counts at the untwisted means: expand each factor into the
  // tilted-centered part plus the mean shift -lambda (1 - cos b) m_sep({j}).
  for (std::uint32_t T = 0;; ++T) {
    double pref = 1.0;
    for (int j = 0; j < n; ++j)
      if (((T >> j) & 1u) == 0) pref *= -lambda * tilt * mass_sep(1u << j);
    double psum = 0.0;
    for (const auto& partition : partitions_of_mask(T)) {
      double term = 1.0;
      for (std::uint32_t block : partition) term *= lambda * tilted(block);
      psum += term;
    }
    total += pref * psum;
    if (T == full) break;
  }
  return total;
}

double npoint_edge_formula(const AlphaTable& table, int n) {
  if (n < 2 || n > int(table.points.size()))
    throw std::invalid_argument("npoint_edge_formula: n out of range");
  auto mass = [&](std::uint32_t s) {
    EventKey key;
    key.subset = s;
    return table.alpha(key);
  };
  return npoint_edge_raw(mass, table.lambda, n) * std::pow(table.lambda, -0.5 * n);
}

double npoint_higher_order_formula(const AlphaTable& table, const std::vector<int>& k) {
  if (k.empty() || k.size() > table.points.size())
    throw std::invalid_argument("npoint_higher_order_formula: bad multiplicities");
  auto mass = [&](std::uint32_t s) {
    EventKey key;
    key.subset = s;
    return table.alpha(key);
  };
  double total = 0.0;
  for (const auto& mset : multisets_with_multiplicity(k)) {
    double term = 1.0;
    for (const auto& [m, mult] : mset)
      term *= std::pow(table.lambda * mass(m), mult) / factorial(mult);
    total += term;
  }
  double pref = 1.0;
  for (int kj : k) pref *= std::sqrt(factorial(kj)) * std::pow(table.lambda, -0.5 * kj);
  return pref * total;
}

double charged_two_point(const AlphaTable& table, double beta) {
  const double tilt = 1.0 - std::cos(beta);
  EventKey pair;
  pair.subset = 0b11u;
  EventKey pair_sep = pair;
  pair_sep.sep_a = 0;
  pair_sep.sep_b = 1;
  EventKey hug0;  // hits disk 0, winds around point 1, leaves point 0 outside
  hug0.subset = 0b01u;
  hug0.cover = 1;
  hug0.avoid = 0;
  EventKey hug1;
  hug1.subset = 0b10u;
  hug1.cover = 0;
  hug1.avoid = 1;
  return table.alpha(pair) - tilt * table.alpha(pair_sep) +
         table.lambda * tilt * tilt * table.alpha(hug0) * table.alpha(hug1);
}

// ---------------------------------------------------------------------------
// Toy model

double toy_mass(const std::vector<ToyAtom>& atoms, std::uint32_t subset, bool separating_only) {
  double m = 0.0;
  for (const auto& a : atoms)
    if ((a.hits & subset) == subset && (!separating_only || a.separating)) m += a.mass;
  return m;
}

double toy_poisson_oracle(const std::vector<ToyAtom>& atoms, double lambda,
                          const std::vector<int>& k, bool twisted, double beta) {
  const int n = static_cast<int>(k.size());
  if (n < 1 || n > 8) throw std::invalid_argument("toy_poisson_oracle: need 1..8 points");
  if (atoms.size() > 16) throw std::invalid_argument("toy_poisson_oracle: too many atoms");
  int ksum = 0;
  std::size_t total = 1;
  std::vector<std::size_t> stride(n);
  for (int j = 0; j < n; ++j) {
    if (k[j] < 0 || k[j] > 32) throw std::invalid_argument("toy_poisson_oracle: bad multiplicity");
    ksum += k[j];
    stride[j] = total;
    total *= k[j] + 1;
    if (total > (std::size_t{1} << 16)) throw std::invalid_argument("toy_poisson_oracle: truncation too large");
  }
  if (ksum > 32) throw std::invalid_argument("toy_poisson_oracle: sum of k exceeds 32");

  std::vector<std::vector<int>> digits(total, std::vector<int>(n));
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t r = idx;
    for (int j = 0; j < n; ++j) {
      digits[idx][j] = int(r % (k[j] + 1));
      r /= k[j] + 1;
    }
  }

  // P(u) = sum_i lambda_i^* (prod_{j in H_i} (1 + u_j) - 1), truncated to the box.
  std::vector<double> p(total, 0.0);
  std::uint32_t live = 0;
  for (int j = 0; j < n; ++j)
    if (k[j] >= 1) live |= 1u << j;
  for (const auto& a : atoms) {
    const double lam = lambda * a.mass * (twisted && a.separating ? std::cos(beta) : 1.0);
    const std::uint32_t h = a.hits & live;
    for (std::uint32_t s = h; s != 0; s = (s - 1) & h) {
      std::size_t idx = 0;
      for (int j = 0; j < n; ++j)
        if ((s >> j) & 1u) idx += stride[j];
      p[idx] += lam;
    }
  }

  auto trunc_mul = [&](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> c(total, 0.0);
    for (std::size_t ia = 0; ia < total; ++ia) {
      if (a[ia] == 0.0) continue;
      for (std::size_t ib = 0; ib < total; ++ib) {
        if (b[ib] == 0.0) continue;
        bool ok = true;
        std::size_t ic = 0;
        for (int j = 0; j < n; ++j) {
          const int d = digits[ia][j] + digits[ib][j];
          if (d > k[j]) {
            ok = false;
            break;
          }
          ic += std::size_t(d) * stride[j];
        }
        if (ok) c[ic] += a[ia] * b[ib];
      }
    }
    return c;
  };

  // exp(P) by the power series; P has no constant term so degree m >= ksum + 1
  // contributes nothing inside the truncation box.
  std::vector<double> expp(total, 0.0), term = p;
  expp[0] = 1.0;
  for (std::size_t i = 0; i < total; ++i) expp[i] += term[i];
  for (int m = 2; m <= ksum; ++m) {
    term = trunc_mul(term, p);
    for (std::size_t i = 0; i < total; ++i) term[i] /= m;
    for (std::size_t i = 0; i < total; ++i) expp[i] += term[i];
  }

  std::vector<double> nu(n, 0.0);
  for (const auto& a : atoms)
    for (int j = 0; j < n; ++j)
      if ((a.hits >> j) & 1u) nu[j] += lambda * a.mass;

  double result = 0.0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (expp[idx] == 0.0) continue;
    double c = expp[idx];
    for (int j = 0; j < n; ++j) {
      const int r = digits[idx][j];
      c *= factorial(r) * binom(k[j], r) * std::pow(-nu[j], k[j] - r);
    }
    result += c;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Soup estimator

namespace {

// Poisson soup restricted to loops rooted within reach of the query cluster:
// root in R(t) = query bbox inflated by spread * sqrt(t) + margin. The area
// |R(t)| = (w + 2s sqrt(t))(h + 2s sqrt(t)) splits the t-marginal into three
// exactly invertible components.
struct RestrictedSoupSampler {
  double t_min = 0, t_max = 0, spread = 3.5, margin = 0;
  sim::Rect base;
  double wt = 0, ht = 0;
  double m0 = 0, m1 = 0, m2 = 0;  // component masses (times 2 pi)
  double mass = 0;

  RestrictedSoupSampler(const SoupConfig& cfg) {
    t_min = cfg.window.t_min;
    t_max = cfg.window.t_max;
    margin = cfg.margin;
    if (!(t_min > 0) || !(t_max > t_min))
      throw std::invalid_argument("soup estimator: bad duration band");
    base = sim::Rect{cfg.points[0].real(), cfg.points[0].real(), cfg.points[0].imag(),
                     cfg.points[0].imag()};
    for (const auto& p : cfg.points) {
      base.xmin = std::min(base.xmin, p.real());
      base.xmax = std::max(base.xmax, p.real());
      base.ymin = std::min(base.ymin, p.imag());
      base.ymax = std::max(base.ymax, p.imag());
    }
    const sim::Rect largest = sim::inflate(base, spread * std::sqrt(t_max) + margin);
    const sim::Rect& reg = cfg.window.region;
    if (largest.xmin < reg.xmin || largest.xmax > reg.xmax || largest.ymin < reg.ymin ||
        largest.ymax > reg.ymax)
      throw std::invalid_argument("soup estimator: window region clips the root support");
    wt = base.width() + 2.0 * margin;
    ht = base.height() + 2.0 * margin;
    const double i2 = 1.0 / t_min - 1.0 / t_max;
    const double i32 = 2.0 * (1.0 / std::sqrt(t_min) - 1.0 / std::sqrt(t_max));
    const double i1 = std::log(t_max / t_min);
    m0 = wt * ht * i2;
    m1 = 2.0 * spread * (wt + ht) * i32;
    m2 = 4.0 * spread * spread * i1;
    mass = (m0 + m1 + m2) / kTwoPi;
  }

  double sample_t(Rng& rng) const {
    const double u = rng.uniform() * (m0 + m1 + m2);
    const double v = rng.uniform_pos();
    if (u < m0) {
      const double a = 1.0 / t_min, b = 1.0 / t_max;
      return 1.0 / (a - v * (a - b));
    }
    if (u < m0 + m1) {
      const double a = 1.0 / std::sqrt(t_min), b = 1.0 / std::sqrt(t_max);
      const double x = a - v * (a - b);
      return 1.0 / (x * x);
    }
    return t_min * std::exp(v * std::log(t_max / t_min));
  }

  cd sample_root(double t, Rng& rng) const {
    const sim::Rect r = sim::inflate(base, spread * std::sqrt(t) + margin);
    return {rng.uniform(r.xmin, r.xmax), rng.uniform(r.ymin, r.ymax)};
  }
};

struct LoopFlags {
  std::uint32_t hits = 0;
  bool separating = false;
};

}  // namespace

SoupResult soup_estimate_npoint(const SoupConfig& cfg, Rng& rng) {
  if (cfg.points.empty() || cfg.points.size() > 16)
    throw std::invalid_argument("soup estimator: need 1..16 points");
  if (!(cfg.eps > 0) || !(cfg.h > 0) || !(cfg.grid_res > 0))
    throw std::invalid_argument("soup estimator: eps, h, grid_res must be positive");
  if (!(cfg.delta >= 4.0 * cfg.grid_res))
    throw std::invalid_argument("soup estimator: delta must be >= 4 * grid_res");
  if (cfg.n_realizations == 0 || cfg.centering_samples == 0)
    throw std::invalid_argument("soup estimator: zero budget");
  if (cfg.twist_a >= 0 || cfg.twist_b >= 0) {
    if (cfg.twist_a < 0 || cfg.twist_b < 0 || cfg.twist_a == cfg.twist_b ||
        cfg.twist_a >= int(cfg.points.size()) || cfg.twist_b >= int(cfg.points.size()))
      throw std::invalid_argument("soup estimator: bad twist pair");
  }

  const RestrictedSoupSampler sampler(cfg);
  const std::size_t np = cfg.points.size();
  std::vector<double> qx(np), qy(np);
  for (std::size_t j = 0; j < np; ++j) {
    qx[j] = cfg.points[j].real();
    qy[j] = cfg.points[j].imag();
  }
  const auto& ops = kern::kernels();
  const bool twisted = cfg.twist_a >= 0;

  sim::LoopSample sample;
  std::vector<double> pd2(np), bd2(np);

  auto evaluate = [&](Rng& r) -> LoopFlags {
    const double t = sampler.sample_t(r);
    const cd root = sampler.sample_root(t, r);
    sim::sample_bridge(root, t, sim::bridge_steps(t, cfg.h), r, sample.xs, sample.ys);
    LoopFlags f;
    double pb[4];
    ops.bbox(sample.xs.data(), sample.ys.data(), sample.xs.size(), pb);
    const double w = pb[1] - pb[0], h = pb[3] - pb[2];
    if (std::hypot(w, h) < cfg.delta) return f;  // below the soup cutoff
    const double res_eff = effective_resolution(std::max(w, h), cfg.grid_res, cfg.grid_cap);
    const double pad = cfg.eps + 3.0 * res_eff;
    bool near = false, enclosable = false;
    for (std::size_t j = 0; j < np; ++j) {
      if (qx[j] >= pb[0] - pad && qx[j] <= pb[1] + pad && qy[j] >= pb[2] - pad &&
          qy[j] <= pb[3] + pad)
        near = true;
    }
    if (twisted) {
      // Enclosure is decided on the traced boundary, which can bulge up to two
      // cells past the path bounding box; keep the gate conservative.
      for (int j : {cfg.twist_a, cfg.twist_b})
        if (qx[j] > pb[0] - pad && qx[j] < pb[1] + pad && qy[j] > pb[2] - pad &&
            qy[j] < pb[3] + pad)
          enclosable = true;
    }
    if (!near && !enclosable) return f;
    if (near) {
      ops.min_dist_sq(sample.xs.data(), sample.ys.data(), sample.xs.size(), qx.data(), qy.data(),
                      np, pd2.data());
      near = false;
      for (std::size_t j = 0; j < np; ++j)
        if (pd2[j] <= pad * pad) near = true;
    }
    if (!near && !enclosable) return f;

    geom::SimpleLoop loop;
    try {
      loop = geom::outer_boundary(sample.xs, sample.ys, res_eff, cfg.grid_cap);
    } catch (const geom::DegenerateLoop&) {
      return f;
    }
    if (loop.diameter < cfg.delta) return f;
    if (near) {
      ops.min_dist_sq(loop.xs.data(), loop.ys.data(), loop.xs.size(), qx.data(), qy.data(), np,
                      bd2.data());
      for (std::size_t j = 0; j < np; ++j)
        if (bd2[j] <= cfg.eps * cfg.eps) f.hits |= 1u << j;
    }
    if (twisted)
      f.separating = geom::separates_relaxed(loop, cfg.points[cfg.twist_a], cfg.points[cfg.twist_b]);
    return f;
  };

  SoupResult result;
  result.nu.assign(np, 0.0);

  // Centering pre-pass: per-point windowed hit intensity and separating mass.
  std::vector<std::uint64_t> hit_counts(np, 0);
  std::uint64_t sep_count = 0;
  for (std::uint64_t i = 0; i < cfg.centering_samples; ++i) {
    const LoopFlags f = evaluate(rng);
    for (std::size_t j = 0; j < np; ++j)
      if ((f.hits >> j) & 1u) ++hit_counts[j];
    if (f.separating) ++sep_count;
  }
  for (std::size_t j = 0; j < np; ++j)
    result.nu[j] = cfg.lambda * sampler.mass * double(hit_counts[j]) / double(cfg.centering_samples);
  result.sep_mass = sampler.mass * double(sep_count) / double(cfg.centering_samples);

  stats::RunningStat num_stat, den_stat;
  std::vector<double> counts(np);
  const double cb = std::cos(cfg.beta);
  for (std::uint64_t r = 0; r < cfg.n_realizations; ++r) {
    const std::uint64_t k = rng.poisson(cfg.lambda * sampler.mass);
    std::fill(counts.begin(), counts.end(), 0.0);
    std::uint64_t sep_loops = 0;
    double phase_re = 1.0, phase_im = 0.0;
    for (std::uint64_t i = 0; i < k; ++i) {
      const LoopFlags f = evaluate(rng);
      for (std::size_t j = 0; j < np; ++j)
        if ((f.hits >> j) & 1u) counts[j] += 1.0;
      if (f.separating) {
        ++sep_loops;
        if (cfg.spin_sampled) {
          const double s = rng.coin() ? cfg.beta : -cfg.beta;
          const double c = std::cos(s), si = std::sin(s);
          const double re = phase_re * c - phase_im * si;
          phase_im = phase_re * si + phase_im * c;
          phase_re = re;
        }
      }
    }
    result.loops_total += k;
    // Twist anchors carry only the phase decoration, never a count factor.
    double prod = 1.0;
    for (std::size_t j = 0; j < np; ++j)
      if (!twisted || (int(j) != cfg.twist_a && int(j) != cfg.twist_b))
        prod *= counts[j] - result.nu[j];
    if (!twisted) {
      num_stat.add(prod);
    } else if (cfg.spin_sampled) {
      num_stat.add(prod * phase_re);
      den_stat.add(phase_re);
    } else {
      num_stat.add(prod * std::pow(cb, double(sep_loops)));
    }
  }

  const stats::Estimate num = stats::Estimate::from_stat(num_stat);
  if (!twisted) {
    result.product_mean = num;
  } else if (cfg.spin_sampled) {
    const stats::Estimate den = stats::Estimate::from_stat(den_stat);
    if (den.value == 0) throw std::runtime_error("soup estimator: vanishing twisted normalization");
    stats::Estimate ratio;
    ratio.value = num.value / den.value;
    const double rn = num.value == 0 ? 0 : num.stderr_value / std::abs(num.value);
    const double rd = den.stderr_value / std::abs(den.value);
    ratio.stderr_value = std::abs(ratio.value) * std::sqrt(rn * rn + rd * rd) +
                         (num.value == 0 ? num.stderr_value / std::abs(den.value) : 0.0);
    ratio.n = num.n;
    result.product_mean = ratio;
  } else {
    // Analytic normalization of the cos(beta) reweighting.
    const double den = std::exp(-cfg.lambda * result.sep_mass * (1.0 - cb));
    result.product_mean = num.scaled(1.0 / den);
  }
  return result;
}

}  // namespace bls::corr
