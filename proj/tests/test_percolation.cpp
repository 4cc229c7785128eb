#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <vector>

#include "bls/percolation.hpp"
#include "bls/rng.hpp"

using namespace bls;

namespace {

long long norm2(int i, int j) { return 1LL * i * i + 1LL * i * j + 1LL * j * j; }

constexpr std::array<std::pair<int, int>, 6> kSteps = {
    {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, -1}, {-1, 1}}};

// Reference annulus: explicit site list, neighbour lists, and contact flags,
// built independently of the production board layout.
struct RefAnnulus {
  int r, R;
  std::vector<std::pair<int, int>> sites;
  std::map<std::pair<int, int>, int> index;
  std::vector<std::vector<int>> nbr;
  std::vector<bool> inner, outer;

  RefAnnulus(int r_, int R_) : r(r_), R(R_) {
    const long long lo = 1LL * r * r, hi = 1LL * R * R;
    // rows reach |j| = 2R/sqrt(3) in axial coordinates
    const int jext = int(std::ceil(2.0 * R / std::sqrt(3.0))) + 1;
    const int iext = R + jext / 2 + 2;
    for (int j = -jext; j <= jext; ++j)
      for (int i = -iext; i <= iext; ++i)
        if (norm2(i, j) > lo && norm2(i, j) < hi) {
          index[{i, j}] = int(sites.size());
          sites.push_back({i, j});
        }
    nbr.resize(sites.size());
    inner.assign(sites.size(), false);
    outer.assign(sites.size(), false);
    for (std::size_t s = 0; s < sites.size(); ++s) {
      auto [i, j] = sites[s];
      for (auto [di, dj] : kSteps) {
        const long long q = norm2(i + di, j + dj);
        if (q <= lo) inner[s] = true;
        if (q >= hi) outer[s] = true;
        auto it = index.find({i + di, j + dj});
        if (it != index.end()) nbr[s].push_back(it->second);
      }
    }
  }
};

// One arm of color c: plain BFS from inner-contact to outer-contact sites.
bool ref_one_arm(const RefAnnulus& a, const std::vector<int>& state, int color) {
  std::vector<char> seen(a.sites.size(), 0);
  std::queue<int> q;
  for (std::size_t s = 0; s < a.sites.size(); ++s)
    if (a.inner[s] && state[s] == color) {
      seen[s] = 1;
      q.push(int(s));
    }
  while (!q.empty()) {
    int s = q.front();
    q.pop();
    if (a.outer[s]) return true;
    for (int t : a.nbr[s])
      if (!seen[t] && state[t] == color) {
        seen[t] = 1;
        q.push(t);
      }
  }
  return false;
}

// Two site-disjoint arms of color c: Menger via unit-vertex-capacity max flow
// (each site split into in/out nodes), Edmonds-Karp stopped at flow 2.
bool ref_two_disjoint_arms(const RefAnnulus& a, const std::vector<int>& state, int color) {
  const int n = int(a.sites.size());
  const int nodes = 2 * n + 2, src = 2 * n, dst = 2 * n + 1;
  std::vector<int> head(nodes, -1), nxt, to, cap;
  auto add = [&](int u, int v, int c) {
    nxt.push_back(head[u]);
    to.push_back(v);
    cap.push_back(c);
    head[u] = int(to.size()) - 1;
    nxt.push_back(head[v]);
    to.push_back(u);
    cap.push_back(0);
    head[v] = int(to.size()) - 1;
  };
  for (int s = 0; s < n; ++s) {
    if (state[s] != color) continue;
    add(2 * s, 2 * s + 1, 1);
    if (a.inner[s]) add(src, 2 * s, 2);
    if (a.outer[s]) add(2 * s + 1, dst, 2);
    for (int t : a.nbr[s])
      if (state[t] == color) add(2 * s + 1, 2 * t, 1);
  }
  int flow = 0;
  std::vector<int> via(nodes);
  while (flow < 2) {
    std::fill(via.begin(), via.end(), -1);
    std::queue<int> q;
    q.push(src);
    while (!q.empty() && via[dst] < 0) {
      int u = q.front();
      q.pop();
      for (int e = head[u]; e >= 0; e = nxt[e])
        if (cap[e] > 0 && via[to[e]] < 0 && to[e] != src) {
          via[to[e]] = e;
          q.push(to[e]);
        }
    }
    if (via[dst] < 0) break;
    for (int v = dst; v != src; v = to[via[v] ^ 1]) {
      cap[via[v]] -= 1;
      cap[via[v] ^ 1] += 1;
    }
    ++flow;
  }
  return flow >= 2;
}

bool ref_three_arm(const RefAnnulus& a, const std::vector<int>& state, bool swap_colors) {
  const int open = swap_colors ? 0 : 1;
  return ref_one_arm(a, state, open) && ref_two_disjoint_arms(a, state, 1 - open);
}

}  // namespace

TEST_CASE("three-arm event agrees with the reference path search on random states") {
  int seen_true = 0, seen_false = 0;
  for (auto [r, R] : {std::pair<int, int>{2, 6}, {3, 8}, {4, 9}, {3, 16}}) {
    RefAnnulus a(r, R);
    REQUIRE(a.sites.size() > 0);
    std::vector<int> state(a.sites.size());
    for (int trial = 0; trial < 100; ++trial) {
      Rng rng(2024, std::uint64_t(1000 * r + trial));
      for (auto& s : state) s = rng.coin() ? 1 : 0;
      auto state_of = [&](int i, int j) {
        auto it = a.index.find({i, j});
        REQUIRE(it != a.index.end());  // only annulus sites may be queried
        return state[it->second];
      };
      const bool got = perc::three_arm_event(r, R, state_of, false);
      CHECK(got == ref_three_arm(a, state, false));
      CHECK(perc::three_arm_event(r, R, state_of, true) == ref_three_arm(a, state, true));
      (got ? seen_true : seen_false) += 1;
    }
  }
  // the comparison must exercise both outcomes
  CHECK(seen_true > 0);
  CHECK(seen_false > 0);
}

TEST_CASE("uniform configurations have no three-arm event") {
  auto all_open = [](int, int) { return 1; };
  auto all_closed = [](int, int) { return 0; };
  for (bool swap : {false, true}) {
    CHECK(!perc::three_arm_event(3, 9, all_open, swap));
    CHECK(!perc::three_arm_event(3, 9, all_closed, swap));
  }
}

TEST_CASE("handcrafted corridors") {
  const int r = 3, R = 9;
  // two closed radial corridors along +i and -i, everything else open
  auto corridors = [](int i, int j) { return (j == 0 && (i >= 4 || i <= -4)) ? 0 : 1; };
  CHECK(perc::three_arm_event(r, R, corridors, false));

  // breaking one corridor leaves a single closed arm
  auto broken = [](int i, int j) {
    if (j == 0 && i == 6) return 1;
    return (j == 0 && (i >= 4 || i <= -4)) ? 0 : 1;
  };
  CHECK(!perc::three_arm_event(r, R, broken, false));

  // swapped colors: a corridor serves as the closed arm and the sea on either
  // side of it supplies two disjoint open arms, so both orientations cross
  auto inverted = [&](int i, int j) { return 1 - corridors(i, j); };
  CHECK(perc::three_arm_event(r, R, inverted, true));
  CHECK(perc::three_arm_event(r, R, corridors, true));
}

TEST_CASE("color swap is equivalent to inverting the configuration") {
  const int r = 3, R = 8;
  RefAnnulus a(r, R);
  std::vector<int> state(a.sites.size());
  for (int trial = 0; trial < 40; ++trial) {
    Rng rng(7, std::uint64_t(trial));
    for (auto& s : state) s = rng.coin() ? 1 : 0;
    auto state_of = [&](int i, int j) { return state[a.index.at({i, j})]; };
    auto flipped = [&](int i, int j) { return 1 - state[a.index.at({i, j})]; };
    CHECK(perc::three_arm_event(r, R, state_of, true) ==
          perc::three_arm_event(r, R, flipped, false));
  }
}

TEST_CASE("shrinking the inner radius only loses configurations") {
  const int R = 9;
  RefAnnulus wide(2, R);
  std::vector<int> state(wide.sites.size());
  for (int trial = 0; trial < 60; ++trial) {
    Rng rng(501, std::uint64_t(trial));
    for (auto& s : state) s = rng.coin() ? 1 : 0;
    auto state_of = [&](int i, int j) {
      auto it = wide.index.find({i, j});
      return it == wide.index.end() ? 0 : state[it->second];
    };
    const bool e2 = perc::three_arm_event(2, R, state_of, false);
    const bool e4 = perc::three_arm_event(4, R, state_of, false);
    CHECK((!e2 || e4));
  }
}

TEST_CASE("degenerate annulus is vacuously crossed") {
  auto anything = [](int, int) { return 0; };
  CHECK(perc::three_arm_event(5, 5, anything, false));
  perc::ArmExperiment exp;
  exp.inner_radius = 7;
  exp.outer_radius = 7;
  exp.n_trials = 10;
  const perc::ArmResult res = perc::three_arm_probability(exp);
  CHECK(res.degenerate);
  CHECK(res.theta.value == 1.0);
  CHECK(res.theta.stderr_value == 0.0);
}

TEST_CASE("ladder estimates are deterministic, nested, and labeled") {
  const std::vector<int> radii = {2, 3, 4};
  auto a = perc::arm_ladder(radii, 12, 400, 99);
  auto b = perc::arm_ladder(radii, 12, 400, 99);
  REQUIRE(a.size() == 3);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].inner_radius == radii[k]);
    CHECK(a[k].outer_radius == 12);
    CHECK(a[k].theta.value == b[k].theta.value);
    CHECK(a[k].theta.stderr_value == b[k].theta.stderr_value);
    CHECK(a[k].theta.n == 400);
    CHECK(a[k].theta.value >= 0.0);
    CHECK(a[k].theta.value <= 1.0);
  }
  // shared configurations make the monotonicity exact, not just statistical
  CHECK(a[0].theta.value <= a[1].theta.value);
  CHECK(a[1].theta.value <= a[2].theta.value);

  auto c = perc::arm_ladder(radii, 12, 400, 100);
  bool any_diff = false;
  for (std::size_t k = 0; k < a.size(); ++k) any_diff |= c[k].theta.value != a[k].theta.value;
  CHECK(any_diff);

  // single-rung probability runs the same estimator
  perc::ArmExperiment exp;
  exp.inner_radius = 3;
  exp.outer_radius = 12;
  exp.n_trials = 400;
  exp.seed = 99;
  CHECK(perc::three_arm_probability(exp).theta.value == a[1].theta.value);
}

TEST_CASE("geometry and parameter validation") {
  perc::ArmExperiment exp;
  exp.inner_radius = 1;
  CHECK_THROWS_AS(perc::three_arm_probability(exp), std::invalid_argument);
  exp.inner_radius = 8;
  exp.outer_radius = 4;
  CHECK_THROWS_AS(perc::three_arm_probability(exp), std::invalid_argument);
  exp.outer_radius = 8192;
  CHECK_THROWS_AS(perc::three_arm_probability(exp), std::invalid_argument);
  exp.outer_radius = 16;
  exp.p = 0.6;
  CHECK_THROWS_AS(perc::three_arm_probability(exp), std::invalid_argument);
  exp.p = 0.5;
  exp.n_trials = 0;
  CHECK_THROWS_AS(perc::three_arm_probability(exp), std::invalid_argument);

  CHECK_THROWS_AS(perc::arm_ladder({}, 16, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(perc::arm_ladder({4, 16}, 16, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(perc::arm_ladder({4}, 16, 0, 1), std::invalid_argument);
}

TEST_CASE("exponent fit recovers an exact power law") {
  std::vector<perc::ArmLadderPoint> ladder;
  for (int r : {4, 8, 16, 31}) {
    perc::ArmLadderPoint p;
    p.inner_radius = r;
    p.outer_radius = 128;
    p.theta = {0.7 * std::pow(double(r) / 128.0, 2.0 / 3.0), 1e-3, 1000};
    ladder.push_back(p);
  }
  const stats::SlopeFit fit = perc::fit_arm_exponent(ladder);
  CHECK(std::fabs(fit.slope - 2.0 / 3.0) < 1e-12);

  CHECK_THROWS_AS(perc::fit_arm_exponent({ladder[0], ladder[1]}), std::invalid_argument);
  ladder[2].theta.value = 0.0;
  CHECK_THROWS_AS(perc::fit_arm_exponent(ladder), std::invalid_argument);
}

TEST_CASE("csv layout") {
  auto ladder = perc::arm_ladder({3, 4}, 10, 50, 7);
  const std::string csv = perc::to_csv(ladder);
  REQUIRE(csv.substr(0, 20) == "r,R,theta,stderr,n\n3");
  int lines = 0;
  for (char ch : csv)
    if (ch == '\n') ++lines;
  CHECK(lines == 3);
  CHECK(csv.find(",10,") != std::string::npos);
  CHECK(csv.back() == '\n');
}
