#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "bls/loopmeasure.hpp"
#include "bls/rng.hpp"
#include "bls/stats.hpp"

using namespace bls;
using sim::cd;

namespace {

constexpr double kPi = 3.14159265358979323846;

sim::MeasureWindow window(double t_min, double t_max, double x0, double x1, double y0, double y1) {
  sim::MeasureWindow w;
  w.t_min = t_min;
  w.t_max = t_max;
  w.region = sim::Rect{x0, x1, y0, y1};
  return w;
}

}  // namespace

TEST_CASE("rect helpers") {
  sim::Rect a{0, 2, 0, 1};
  CHECK(a.width() == 2.0);
  CHECK(a.height() == 1.0);
  CHECK(a.area() == 2.0);
  CHECK(a.contains(cd(1, 0.5)));
  CHECK(!a.contains(cd(3, 0.5)));

  sim::Rect b = sim::intersect(a, sim::Rect{1, 5, -1, 0.5});
  CHECK(b.xmin == 1.0);
  CHECK(b.xmax == 2.0);
  CHECK(b.ymin == 0.0);
  CHECK(b.ymax == 0.5);

  sim::Rect c = sim::inflate(a, 0.25);
  CHECK(c.xmin == -0.25);
  CHECK(c.xmax == 2.25);
  CHECK(c.ymin == -0.25);
  CHECK(c.ymax == 1.25);
}

TEST_CASE("window mass is area * (1/t_min - 1/t_max) / (2 pi)") {
  sim::MeasureWindow w = window(0.5, 4.0, 0, 2, -1, 1);
  double expected = 4.0 * (1.0 / 0.5 - 1.0 / 4.0) / (2.0 * kPi);
  CHECK(w.mass() == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("bridge closes and stays rooted") {
  Rng rng(301);
  std::vector<double> xs, ys;
  sim::sample_bridge(cd(1.5, -0.5), 2.0, 128, rng, xs, ys);
  REQUIRE(xs.size() == 129);
  REQUIRE(ys.size() == 129);
  CHECK(xs.front() == 1.5);
  CHECK(ys.front() == -0.5);
  CHECK(xs.back() == xs.front());
  CHECK(ys.back() == ys.front());
}

TEST_CASE("bridge midpoint variance is t/4 per coordinate") {
  // Var x_s = s (t - s) / t at s = t/2 gives t/4.
  Rng rng(302);
  const double t = 3.0;
  const int n = 20000;
  stats::RunningStat mid;
  std::vector<double> xs, ys;
  for (int i = 0; i < n; ++i) {
    sim::sample_bridge(cd(0, 0), t, 64, rng, xs, ys);
    mid.add(xs[32]);
  }
  double want = t / 4.0;
  // Var of the sample variance of a Gaussian is 2 sigma^4 / n.
  double tol = 4.0 * std::sqrt(2.0 * want * want / n);
  CHECK(std::fabs(mid.variance() - want) < tol);
  CHECK(std::fabs(mid.mean) < 4.0 * std::sqrt(want / n));
}

TEST_CASE("bridge quarter-point covariance matches s(t-s)/t structure") {
  // Cov(x_s, x_u) = s (t - u) / t for s <= u; s = t/4, u = t/2 gives t/8.
  Rng rng(303);
  const double t = 2.0;
  const int n = 20000;
  double acc = 0;
  std::vector<double> xs, ys;
  for (int i = 0; i < n; ++i) {
    sim::sample_bridge(cd(0, 0), t, 64, rng, xs, ys);
    acc += xs[16] * xs[32];
  }
  double want = t / 8.0;
  CHECK(acc / n == doctest::Approx(want).epsilon(0.1));
}

TEST_CASE("bridge_steps policy bounds") {
  // Spatial step ~ h/sqrt(2) means n ~ 2 t / h^2, floored and capped.
  CHECK(sim::bridge_steps(1e-12, 0.1) == 64);
  CHECK(sim::bridge_steps(1.0, 1e-9) == (std::size_t(1) << 22));
  std::size_t n = sim::bridge_steps(1.0, 0.01);
  double step_sd = std::sqrt(1.0 / double(n));
  CHECK(step_sd == doctest::Approx(0.01 / std::sqrt(2.0)).epsilon(0.2));
  CHECK(sim::bridge_steps(4.0, 0.01) == doctest::Approx(4.0 * double(n)).epsilon(0.01));
}

TEST_CASE("measure sampler weight equals window mass and marginals are exact") {
  sim::MeasureWindow w = window(0.25, 4.0, -1, 1, 0, 2);
  Rng rng(304);
  const int n = 40000;
  int in_region = 0;
  int t_below_1 = 0;
  stats::RunningStat root_x;
  for (int i = 0; i < n; ++i) {
    sim::LoopSample s = sim::sample_loop_from_measure(w, rng, 0.5);
    CHECK(s.weight == doctest::Approx(w.mass()).epsilon(1e-12));
    REQUIRE(s.duration >= 0.25);
    REQUIRE(s.duration <= 4.0);
    in_region += w.region.contains(s.root);
    t_below_1 += s.duration < 1.0;
    root_x.add(s.root.real());
  }
  CHECK(in_region == n);
  // P(T < 1) under t^{-2} on [1/4, 4] = (4 - 1) / (4 - 1/4) = 0.8.
  double p = 0.8;
  CHECK(std::fabs(double(t_below_1) / n - p) < 4.0 * std::sqrt(p * (1 - p) / n));
  CHECK(std::fabs(root_x.mean) < 4.0 * root_x.stderr_mean());
}

TEST_CASE("measure sampler is deterministic in the seed") {
  sim::MeasureWindow w = window(0.1, 2.0, -1, 1, -1, 1);
  Rng r1(77), r2(77);
  for (int i = 0; i < 10; ++i) {
    sim::LoopSample a = sim::sample_loop_from_measure(w, r1, 0.2);
    sim::LoopSample b = sim::sample_loop_from_measure(w, r2, 0.2);
    CHECK(a.root == b.root);
    CHECK(a.duration == b.duration);
    REQUIRE(a.xs.size() == b.xs.size());
    CHECK(a.xs == b.xs);
    CHECK(a.ys == b.ys);
  }
}

TEST_CASE("targeted proposal reweights to the same windowed integrals") {
  // Estimate the windowed mass of {loops with duration in [a,b] and root in a
  // sub-rectangle} two ways: plain sampling and the targeted proposal. Both are
  // pre-discretization events, so the weighted indicators agree in expectation.
  sim::MeasureWindow w = window(0.04, 1.0, -2, 2, -2, 2);
  sim::TargetedProposal prop;
  prop.window = w;
  prop.query_bbox = sim::Rect{-0.3, 0.3, -0.3, 0.3};
  prop.t_floor = 0.01;  // below t_min: inactive, keeps the density ratio exact
  prop.margin = 0.1;

  auto event = [](const sim::LoopSample& s) {
    return s.duration >= 0.09 && s.duration <= 0.5 && std::fabs(s.root.real()) <= 0.25 &&
           std::fabs(s.root.imag()) <= 0.25;
  };

  Rng rp(305), rt(306);
  stats::RunningStat plain, targeted;
  sim::LoopSample s;
  for (int i = 0; i < 60000; ++i) {
    sim::sample_loop_from_measure(w, rp, 0.3, s);
    plain.add(event(s) ? s.weight : 0.0);
    sim::sample_loop_targeted(prop, rt, 0.3, s);
    targeted.add(event(s) ? s.weight : 0.0);
  }
  // Exact windowed mass of the event set.
  double exact = (0.5 * 0.5) * (1.0 / 0.09 - 1.0 / 0.5) / (2.0 * kPi);
  CHECK(std::fabs(plain.mean - exact) < 4.0 * plain.stderr_mean());
  CHECK(std::fabs(targeted.mean - exact) < 4.0 * targeted.stderr_mean());
  // The proposal concentrates samples: its stderr must beat plain sampling.
  CHECK(targeted.stderr_mean() < plain.stderr_mean());
}

TEST_CASE("targeted proposal respects the duration floor") {
  sim::MeasureWindow w = window(1e-4, 1.0, -2, 2, -2, 2);
  sim::TargetedProposal prop;
  prop.window = w;
  prop.query_bbox = sim::Rect{-0.1, 0.1, -0.1, 0.1};
  prop.t_floor = 0.04;
  prop.margin = 0.05;
  CHECK(prop.t_lo() == doctest::Approx(0.04).epsilon(1e-15));
  Rng rng(307);
  sim::LoopSample s;
  for (int i = 0; i < 2000; ++i) {
    sim::sample_loop_targeted(prop, rng, 0.2, s);
    REQUIRE(s.duration >= 0.04);
    REQUIRE(s.duration <= 1.0);
  }
}

TEST_CASE("soup realization is deterministic and respects the diameter cut") {
  sim::DomainSpec dom;
  dom.kind = sim::DomainKind::full_plane;
  dom.window = sim::Rect{-1.5, 1.5, -1.5, 1.5};
  sim::MeasureWindow w = window(0.01, 2.0, -1.5, 1.5, -1.5, 1.5);

  Rng r1(308), r2(308);
  sim::SoupRealization a = sim::sample_soup(dom, w, 1.0, 0.2, 0.05, 0.1, r1);
  sim::SoupRealization b = sim::sample_soup(dom, w, 1.0, 0.2, 0.05, 0.1, r2);
  REQUIRE(a.loops.size() == b.loops.size());
  REQUIRE(a.spins.size() == a.loops.size());
  for (std::size_t i = 0; i < a.loops.size(); ++i) {
    CHECK(a.loops[i].xs == b.loops[i].xs);
    CHECK(a.spins[i] == b.spins[i]);
    CHECK(a.loops[i].diameter >= 0.2);
  }
  CHECK(a.lambda == 1.0);
  CHECK(a.delta == 0.2);
}

TEST_CASE("soup loop count is Poisson with the window mass scaled by lambda") {
  sim::DomainSpec dom;
  dom.kind = sim::DomainKind::full_plane;
  dom.window = sim::Rect{-1, 1, -1, 1};
  // t_min large enough that almost no loop falls below the diameter cut, so the
  // kept count tracks the full Poisson count.
  sim::MeasureWindow w = window(0.25, 1.0, -1, 1, -1, 1);
  const double lambda = 1.5;
  const double mean = lambda * w.mass();

  Rng rng(309);
  const int n = 600;
  stats::RunningStat count;
  for (int i = 0; i < n; ++i) {
    sim::SoupRealization r = sim::sample_soup(dom, w, lambda, 0.0, 0.05, 0.2, rng);
    count.add(double(r.loops.size()));
  }
  CHECK(std::fabs(count.mean - mean) < 4.0 * std::sqrt(mean / n));
  // Spins are fair.
  Rng rs(310);
  int plus = 0, total = 0;
  for (int i = 0; i < 50; ++i) {
    sim::SoupRealization r = sim::sample_soup(dom, w, lambda, 0.0, 0.05, 0.2, rs);
    for (auto s : r.spins) {
      REQUIRE((s == 1 || s == -1));
      plus += s == 1;
      ++total;
    }
  }
  double p = double(plus) / total;
  CHECK(std::fabs(p - 0.5) < 4.0 * std::sqrt(0.25 / total));
}
