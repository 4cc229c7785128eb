#include "bls/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include "bls/rng.hpp"

namespace bls::perc {

namespace {

constexpr std::uint32_t kUnset = 0xFFFFFFFFu;

constexpr int kDirI[6] = {1, -1, 0, 0, 1, -1};
constexpr int kDirJ[6] = {0, 0, 1, -1, -1, 1};

inline long long norm2(long long i, long long j) { return i * i + i * j + j * j; }

// Row of the disk i^2 + i*j + j^2 <= rad2 at height j; lo > hi when empty.
struct RowSpan {
  int lo = 0, hi = -1;
};

RowSpan disk_row(int j, long long rad2) {
  RowSpan s;
  const double disc = 4.0 * double(rad2) - 3.0 * double(j) * double(j);
  if (disc < 0.0) return s;
  const double sq = std::sqrt(disc);
  int lo = int(std::ceil((-double(j) - sq) / 2.0)) - 1;
  int hi = int(std::floor((-double(j) + sq) / 2.0)) + 1;
  while (lo <= hi && norm2(lo, j) > rad2) ++lo;
  while (hi >= lo && norm2(hi, j) > rad2) --hi;
  s.lo = lo;
  s.hi = hi;
  return s;
}

// Visit the row indices inside the outer disk but outside the inner one.
template <class F>
void band_row(int j, long long out_rad2, long long in_rad2, F&& fn) {
  const RowSpan outer = disk_row(j, out_rad2);
  if (outer.lo > outer.hi) return;
  const RowSpan inner = disk_row(j, in_rad2);
  if (inner.lo > inner.hi) {
    for (int i = outer.lo; i <= outer.hi; ++i) fn(i);
    return;
  }
  for (int i = outer.lo; i <= std::min(outer.hi, inner.lo - 1); ++i) fn(i);
  for (int i = std::max(outer.lo, inner.hi + 1); i <= outer.hi; ++i) fn(i);
}

// Flat-indexed board covering the annulus of outer radius R. States are one
// bit per site; visit marks are bitmaps unwound through touch lists, so a
// fresh trial never clears the whole rectangle.
struct Board {
  int R = 0;
  long long R2 = 0;
  int imax = 0, jmax = 0, nx = 0;
  std::vector<std::uint64_t> state, vis1, vis2;
  std::vector<std::uint32_t> vid;
  std::unordered_map<std::uint32_t, std::uint32_t> vid_map;
  bool vid_flat = true;

  explicit Board(int outer_radius) : R(outer_radius), R2(1LL * outer_radius * outer_radius) {
    jmax = int(std::ceil(2.0 * double(R) / std::sqrt(3.0))) + 2;
    imax = R + jmax / 2 + 3;
    nx = 2 * imax + 1;
    const int ny = 2 * jmax + 1;
    const std::size_t cells = std::size_t(nx) * std::size_t(ny);
    const std::size_t words = (cells + 63) / 64;
    state.assign(words, 0);
    vis1.assign(words, 0);
    vis2.assign(words, 0);
    vid_flat = cells <= (std::size_t(48) << 20);
    if (vid_flat) vid.assign(cells, 0);
  }

  std::uint32_t flat(int i, int j) const {
    return std::uint32_t(j + jmax) * std::uint32_t(nx) + std::uint32_t(i + imax);
  }
  int decode_i(std::uint32_t f) const { return int(f % std::uint32_t(nx)) - imax; }
  int decode_j(std::uint32_t f) const { return int(f / std::uint32_t(nx)) - jmax; }

  static bool test(const std::vector<std::uint64_t>& bm, std::uint32_t f) {
    return (bm[f >> 6] >> (f & 63)) & 1u;
  }
  static void set(std::vector<std::uint64_t>& bm, std::uint32_t f) {
    bm[f >> 6] |= std::uint64_t(1) << (f & 63);
  }
  static void clear(std::vector<std::uint64_t>& bm, std::uint32_t f) {
    bm[f >> 6] &= ~(std::uint64_t(1) << (f & 63));
  }

  int state_of(std::uint32_t f) const { return int((state[f >> 6] >> (f & 63)) & 1u); }

  std::uint32_t vid_of(std::uint32_t f) const { return vid_flat ? vid[f] : vid_map.at(f); }
  void vid_set(std::uint32_t f, std::uint32_t v) {
    if (vid_flat)
      vid[f] = v;
    else
      vid_map[f] = v;
  }
};

struct Scratch {
  std::vector<std::uint32_t> queue1, queue2;  // BFS order, never popped
  std::size_t qh1 = 0, qh2 = 0;
  std::vector<std::uint32_t> pend1, pend2, rescan;  // paused at the stage radius
  std::vector<std::uint32_t> seen1, seen2;          // for unwinding the bitmaps
  std::vector<std::uint32_t> closed_cells;          // vid -> flat index
  std::vector<std::uint32_t> a_vids, b_vids, b_raw;
  std::vector<std::uint8_t> a_flag, b_flag;
  std::vector<std::uint32_t> disc, low, par;
  struct Frame {
    std::uint32_t v, parent, ei;
  };
  std::vector<Frame> stack;
  bool reached1 = false;
};

// Two fully vertex-disjoint crossings exist iff the virtual terminals sit in
// one biconnected block: after a DFS from sigma, no ancestor of tau may have
// its chain child's low value at or below its own discovery time.
bool two_disjoint_crossings(const Board& b, Scratch& s, long long r2) {
  const std::uint32_t m = std::uint32_t(s.closed_cells.size());
  s.b_flag.assign(m, 0);
  s.b_vids.clear();
  for (std::uint32_t f : s.b_raw) {
    const std::uint32_t v = b.vid_of(f);
    if (!s.b_flag[v]) {
      s.b_flag[v] = 1;
      s.b_vids.push_back(v);
    }
  }
  if (s.a_vids.size() < 2 || s.b_vids.size() < 2) return false;
  s.a_flag.assign(m, 0);
  for (std::uint32_t v : s.a_vids) s.a_flag[v] = 1;

  const std::uint32_t nv = m + 2;  // 0 = sigma, 1 = tau, site vid + 2
  s.disc.assign(nv, kUnset);
  s.low.assign(nv, 0);
  s.par.assign(nv, kUnset);
  s.stack.clear();

  std::uint32_t timer = 0;
  s.disc[0] = s.low[0] = timer++;
  s.stack.push_back({0, kUnset, 0});
  while (!s.stack.empty()) {
    Scratch::Frame& fr = s.stack.back();
    std::uint32_t w = kUnset;
    while (w == kUnset) {
      if (fr.v == 0) {
        if (fr.ei >= s.a_vids.size()) break;
        w = s.a_vids[fr.ei++] + 2;
      } else if (fr.v == 1) {
        if (fr.ei >= s.b_vids.size()) break;
        w = s.b_vids[fr.ei++] + 2;
      } else {
        if (fr.ei >= 8) break;
        const std::uint32_t e = fr.ei++;
        if (e < 6) {
          const std::uint32_t f = s.closed_cells[fr.v - 2];
          const int wi = b.decode_i(f) + kDirI[e];
          const int wj = b.decode_j(f) + kDirJ[e];
          if (norm2(wi, wj) <= r2) continue;
          const std::uint32_t wf = b.flat(wi, wj);
          if (Board::test(b.vis2, wf)) w = b.vid_of(wf) + 2;
        } else if (e == 6) {
          if (s.a_flag[fr.v - 2]) w = 0;
        } else {
          if (s.b_flag[fr.v - 2]) w = 1;
        }
      }
    }
    if (w == kUnset) {
      const std::uint32_t v = fr.v, p = fr.parent;
      s.stack.pop_back();
      if (p != kUnset) s.low[p] = std::min(s.low[p], s.low[v]);
      continue;
    }
    if (w == fr.parent) continue;  // edges are unique, so this skips the tree edge only
    if (s.disc[w] != kUnset) {
      s.low[fr.v] = std::min(s.low[fr.v], s.disc[w]);
      continue;
    }
    s.disc[w] = s.low[w] = timer++;
    s.par[w] = fr.v;
    s.stack.push_back({w, fr.v, 0});
  }

  if (s.disc[1] == kUnset) return false;
  std::uint32_t cur = 1;
  for (;;) {
    const std::uint32_t p = s.par[cur];
    if (p == 0) return true;
    if (s.low[cur] >= s.disc[p]) return false;
    cur = p;
  }
}

// One single-color arm plus two site-disjoint arms of the other color, from
// the inner disk to the stage radius, widening stages until R. Failing a
// stage bounds the full event from above, so early aborts are exact.
bool three_arm_on_board(Board& b, Scratch& s, int r, bool swap_colors) {
  const long long r2 = 1LL * r * r;
  const int uno_state = swap_colors ? 0 : 1;

  for (std::uint32_t f : s.seen1) Board::clear(b.vis1, f);
  for (std::uint32_t f : s.seen2) Board::clear(b.vis2, f);
  s.queue1.clear();
  s.queue2.clear();
  s.qh1 = s.qh2 = 0;
  s.pend1.clear();
  s.pend2.clear();
  s.seen1.clear();
  s.seen2.clear();
  s.closed_cells.clear();
  s.a_vids.clear();
  if (!b.vid_flat) b.vid_map.clear();

  // Annulus sites with a neighbour inside the disk of radius r seed the
  // search; their norm is at most r + 1, so the band below suffices.
  const long long cand2 = std::min(1LL * (r + 2) * (r + 2), b.R2 - 1);
  for (int j = -(r + 2); j <= r + 2; ++j) {
    band_row(j, cand2, r2, [&](int i) {
      bool attached = false;
      for (int d = 0; d < 6 && !attached; ++d)
        attached = norm2(i + kDirI[d], j + kDirJ[d]) <= r2;
      if (!attached) return;
      const std::uint32_t f = b.flat(i, j);
      if (b.state_of(f) == uno_state) {
        if (!Board::test(b.vis1, f)) {
          Board::set(b.vis1, f);
          s.seen1.push_back(f);
          s.queue1.push_back(f);
        }
      } else {
        if (!Board::test(b.vis2, f)) {
          Board::set(b.vis2, f);
          s.seen2.push_back(f);
          const std::uint32_t v = std::uint32_t(s.closed_cells.size());
          b.vid_set(f, v);
          s.closed_cells.push_back(f);
          s.queue2.push_back(f);
          s.a_vids.push_back(v);
        }
      }
    });
  }
  if (s.queue1.empty() || s.a_vids.size() < 2) return false;

  long long rho = std::min<long long>(2LL * r, b.R);
  for (;;) {
    const long long rho2 = rho * rho;

    auto scan = [&](std::uint32_t f, bool dos) {
      const int i = b.decode_i(f);
      const int j = b.decode_j(f);
      bool paused = false;
      for (int d = 0; d < 6; ++d) {
        const int wi = i + kDirI[d], wj = j + kDirJ[d];
        const long long n2 = norm2(wi, wj);
        if (n2 >= rho2) {
          paused = true;
          continue;
        }
        if (n2 <= r2) continue;
        const std::uint32_t wf = b.flat(wi, wj);
        if (dos) {
          if (Board::test(b.vis2, wf) || b.state_of(wf) == uno_state) continue;
          Board::set(b.vis2, wf);
          s.seen2.push_back(wf);
          const std::uint32_t v = std::uint32_t(s.closed_cells.size());
          b.vid_set(wf, v);
          s.closed_cells.push_back(wf);
          s.queue2.push_back(wf);
        } else {
          if (Board::test(b.vis1, wf) || b.state_of(wf) != uno_state) continue;
          Board::set(b.vis1, wf);
          s.seen1.push_back(wf);
          s.queue1.push_back(wf);
        }
      }
      if (paused) {
        if (dos) {
          s.pend2.push_back(f);
          s.b_raw.push_back(f);
        } else {
          s.pend1.push_back(f);
          s.reached1 = true;
        }
      }
    };

    s.reached1 = false;
    s.rescan.clear();
    s.rescan.swap(s.pend1);
    for (std::uint32_t f : s.rescan) scan(f, false);
    while (s.qh1 < s.queue1.size()) scan(s.queue1[s.qh1++], false);
    if (!s.reached1) return false;

    s.b_raw.clear();
    s.rescan.clear();
    s.rescan.swap(s.pend2);
    for (std::uint32_t f : s.rescan) scan(f, true);
    while (s.qh2 < s.queue2.size()) scan(s.queue2[s.qh2++], true);
    if (!two_disjoint_crossings(b, s, r2)) return false;

    if (rho >= b.R) return true;
    rho = std::min<long long>(2 * rho, b.R);
  }
}

void validate_geometry(int r, int R) {
  if (r < 2) throw std::invalid_argument("three_arm: inner radius below 2 cannot host three arms");
  if (R < r) throw std::invalid_argument("three_arm: outer radius smaller than inner radius");
  if (R > 4096) throw std::invalid_argument("three_arm: outer radius above 4096");
}

}  // namespace

std::vector<ArmLadderPoint> arm_ladder(const std::vector<int>& inner_radii, int outer_radius,
                                       std::uint64_t n_trials, std::uint64_t seed,
                                       bool swap_colors) {
  if (inner_radii.empty()) throw std::invalid_argument("arm_ladder: empty ladder");
  for (int r : inner_radii) {
    validate_geometry(r, outer_radius);
    if (r == outer_radius) throw std::invalid_argument("arm_ladder: degenerate rung r = R");
  }
  if (n_trials == 0) throw std::invalid_argument("arm_ladder: n_trials must be positive");

  Board board(outer_radius);
  Scratch scratch;
  std::vector<std::uint64_t> hits(inner_radii.size(), 0);
  for (std::uint64_t t = 0; t < n_trials; ++t) {
    Rng rng(seed, t);
    for (auto& word : board.state) word = rng.next_u64();
    for (std::size_t k = 0; k < inner_radii.size(); ++k)
      if (three_arm_on_board(board, scratch, inner_radii[k], swap_colors)) ++hits[k];
  }

  std::vector<ArmLadderPoint> out(inner_radii.size());
  for (std::size_t k = 0; k < inner_radii.size(); ++k) {
    const double phat = double(hits[k]) / double(n_trials);
    double se = 0.0;
    if (n_trials > 1) se = std::sqrt(phat * (1.0 - phat) / double(n_trials - 1));
    out[k] = {inner_radii[k], outer_radius, stats::Estimate{phat, se, n_trials}};
  }
  return out;
}

ArmResult three_arm_probability(const ArmExperiment& exp) {
  validate_geometry(exp.inner_radius, exp.outer_radius);
  if (exp.p != 0.5) throw std::invalid_argument("three_arm: occupation probability is pinned at 1/2");
  if (exp.n_trials == 0) throw std::invalid_argument("three_arm: n_trials must be positive");
  if (exp.inner_radius == exp.outer_radius)
    return {stats::Estimate{1.0, 0.0, exp.n_trials}, true};
  const auto pts = arm_ladder({exp.inner_radius}, exp.outer_radius, exp.n_trials, exp.seed,
                              exp.swap_colors);
  return {pts[0].theta, false};
}

stats::SlopeFit fit_arm_exponent(const std::vector<ArmLadderPoint>& ladder) {
  if (ladder.size() < 3) throw std::invalid_argument("fit_arm_exponent: need at least 3 rungs");
  std::vector<double> x, y;
  for (const auto& p : ladder) {
    if (!(p.theta.value > 0.0))
      throw std::invalid_argument("fit_arm_exponent: non-positive estimate in ladder");
    x.push_back(std::log(double(p.inner_radius) / double(p.outer_radius)));
    y.push_back(std::log(p.theta.value));
  }
  return stats::fit_slope(x, y);
}

std::string to_csv(const std::vector<ArmLadderPoint>& ladder) {
  std::string out = "r,R,theta,stderr,n\n";
  char buf[128];
  for (const auto& p : ladder) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.10g,%.4g,%llu\n", p.inner_radius, p.outer_radius,
                  p.theta.value, p.theta.stderr_value,
                  static_cast<unsigned long long>(p.theta.n));
    out += buf;
  }
  return out;
}

bool three_arm_event(int inner_radius, int outer_radius,
                     const std::function<int(int, int)>& state_of, bool swap_colors) {
  validate_geometry(inner_radius, outer_radius);
  if (inner_radius == outer_radius) return true;
  Board board(outer_radius);
  const long long r2 = 1LL * inner_radius * inner_radius;
  for (int j = -board.jmax; j <= board.jmax; ++j) {
    band_row(j, board.R2 - 1, r2, [&](int i) {
      if (state_of(i, j)) Board::set(board.state, board.flat(i, j));
    });
  }
  Scratch scratch;
  return three_arm_on_board(board, scratch, inner_radius, swap_colors);
}

}  // namespace bls::perc
