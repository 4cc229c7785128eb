#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

#include "bls/geometry.hpp"
#include "bls/rng.hpp"

using namespace bls;
using geom::cd;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<cd> circle_path(cd center, double radius, int n) {
  std::vector<cd> p;
  for (int i = 0; i < n; ++i) {
    double a = 2.0 * kPi * i / n;
    p.push_back(center + radius * cd(std::cos(a), std::sin(a)));
  }
  p.push_back(p.front());  // closure must be exact, not within rounding
  return p;
}

}  // namespace

TEST_CASE("diameter_points exact cases") {
  CHECK(geom::diameter_points({0, 3}, {0, 4}) == doctest::Approx(5.0).epsilon(1e-15));
  // Square: diameter is the diagonal.
  CHECK(geom::diameter_points({0, 1, 1, 0}, {0, 0, 1, 1}) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  // Collinear with an interior point.
  CHECK(geom::diameter_points({0, 5, 2}, {0, 0, 0}) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(geom::diameter_points({2}, {7}) == 0.0);
}

TEST_CASE("diameter_points matches brute force on random sets") {
  Rng rng(201);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t n = 2 + rng.below(60);
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n; ++i) {
      xs.push_back(rng.uniform(-3, 3));
      ys.push_back(rng.uniform(-3, 3));
    }
    double best = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        best = std::max(best, std::hypot(xs[i] - xs[j], ys[i] - ys[j]));
    CHECK(geom::diameter_points(xs, ys) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("outer_boundary of a circle has the right size and orientation") {
  const double res = 0.02;
  geom::SimpleLoop loop = geom::outer_boundary(circle_path({0.3, -0.2}, 1.0, 400), res);

  CHECK(loop.grid_res == res);
  CHECK(loop.vertex_count() >= 4);
  CHECK(loop.xs.front() == loop.xs.back());
  CHECK(loop.ys.front() == loop.ys.back());
  // Rasterization distorts by O(res).
  CHECK(loop.diameter == doctest::Approx(2.0).epsilon(0.05));
  CHECK(loop.bbox[0] == doctest::Approx(-0.7).epsilon(0.1));
  CHECK(loop.bbox[1] == doctest::Approx(1.3).epsilon(0.1));

  // Positive orientation: shoelace area > 0, close to pi r^2.
  double area2 = 0;
  for (std::size_t i = 0; i + 1 < loop.vertex_count(); ++i)
    area2 += loop.xs[i] * loop.ys[i + 1] - loop.xs[i + 1] * loop.ys[i];
  CHECK(area2 > 0);
  CHECK(0.5 * area2 == doctest::Approx(kPi).epsilon(0.1));
}

TEST_CASE("outer_boundary swallows interior structure") {
  // A figure centered at 0 visiting a small inner circle too: the outer boundary
  // is the outer circle only.
  std::vector<cd> path = circle_path({0, 0}, 1.0, 300);
  std::vector<cd> inner = circle_path({0, 0}, 0.3, 100);
  path.insert(path.end(), inner.begin(), inner.end());
  path.push_back(path.front());
  geom::SimpleLoop loop = geom::outer_boundary(path, 0.02);
  CHECK(loop.diameter == doctest::Approx(2.0).epsilon(0.06));
  // Points between the circles are interior to the filled outer region.
  CHECK(geom::contains(loop, cd(0.6, 0.0)));
  CHECK(geom::contains(loop, cd(0.0, 0.0)));
}

TEST_CASE("contains and hits_disk on a rasterized circle") {
  geom::SimpleLoop loop = geom::outer_boundary(circle_path({0, 0}, 1.0, 400), 0.01);
  CHECK(geom::contains(loop, cd(0, 0)));
  CHECK(!geom::contains(loop, cd(1.5, 0)));
  CHECK(geom::contains(loop, cd(0.9, 0)));
  CHECK(!geom::contains(loop, cd(1.05, 0)));

  // hits_disk uses the closed-disk rule on boundary distance.
  CHECK(geom::hits_disk(loop, cd(1.2, 0), 0.25));
  CHECK(!geom::hits_disk(loop, cd(1.2, 0), 0.15));
  CHECK(geom::hits_disk(loop, cd(0, 0), 1.05));
  CHECK(!geom::hits_disk(loop, cd(0, 0), 0.9));
}

TEST_CASE("boundary_distance agrees with the circle geometry") {
  geom::SimpleLoop loop = geom::outer_boundary(circle_path({0, 0}, 1.0, 400), 0.01);
  CHECK(geom::boundary_distance(loop, cd(2.0, 0)) == doctest::Approx(1.0).epsilon(0.03));
  CHECK(geom::boundary_distance(loop, cd(0.5, 0)) == doctest::Approx(0.5).epsilon(0.05));
  CHECK(geom::boundary_distance(loop, cd(0, 0)) == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("separates distinguishes in/out pairs and throws near the boundary") {
  geom::SimpleLoop loop = geom::outer_boundary(circle_path({0, 0}, 1.0, 400), 0.01);
  CHECK(geom::separates(loop, cd(0, 0), cd(2, 0)));
  CHECK(!geom::separates(loop, cd(0.1, 0), cd(-0.1, 0)));
  CHECK(!geom::separates(loop, cd(1.6, 0), cd(-1.6, 0)));
  // a boundary vertex is ambiguous by construction
  const cd on_boundary(loop.xs.front(), loop.ys.front());
  CHECK_THROWS_AS((void)geom::separates(loop, on_boundary, cd(0, 0)), geom::BoundaryAmbiguity);

  // The relaxed variant answers by parity regardless of proximity.
  CHECK(geom::separates_relaxed(loop, cd(0, 0), cd(2, 0)));
  CHECK(!geom::separates_relaxed(loop, cd(0.1, 0), cd(-0.1, 0)));
}

TEST_CASE("grid cap rejects resolutions that explode the raster") {
  CHECK_THROWS_AS(geom::outer_boundary(circle_path({0, 0}, 1.0, 64), 1e-5, 512),
                  std::runtime_error);
}

TEST_CASE("degenerate and malformed paths throw") {
  CHECK_THROWS_AS(geom::outer_boundary(std::vector<cd>{}, 0.1), std::invalid_argument);
  // Open path.
  CHECK_THROWS_AS(geom::outer_boundary(std::vector<cd>{{0, 0}, {1, 0}, {1, 1}, {0, 1}}, 0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(geom::outer_boundary(circle_path({0, 0}, 1.0, 100), 0.0), std::invalid_argument);
  // Path smaller than two grid cells cannot be rasterized.
  CHECK_THROWS_AS(geom::outer_boundary(circle_path({0, 0}, 0.01, 16), 0.05), geom::DegenerateLoop);
}

TEST_CASE("to_csv emits one x,y pair per vertex and closes the loop") {
  geom::SimpleLoop loop = geom::outer_boundary(circle_path({0, 0}, 0.5, 100), 0.05);
  std::string csv = geom::to_csv(loop);
  std::istringstream in(csv);
  std::string line;
  REQUIRE(std::getline(in, line));
  REQUIRE(line == "x,y");
  std::size_t rows = 0;
  double x0 = 0, y0 = 0, x = 0, y = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    char comma;
    std::istringstream ls(line);
    REQUIRE((ls >> x >> comma >> y));
    REQUIRE(comma == ',');
    if (rows == 0) {
      x0 = x;
      y0 = y;
    }
    ++rows;
  }
  CHECK(rows == loop.vertex_count());
  CHECK(x == x0);
  CHECK(y == y0);
}

TEST_CASE("small random blobs stay consistent between predicates") {
  Rng rng(202);
  for (int trial = 0; trial < 10; ++trial) {
    // Random closed Brownian-ish blob.
    std::vector<cd> path;
    cd z(0, 0);
    for (int i = 0; i < 200; ++i) {
      path.push_back(z);
      z += cd(0.05 * rng.normal(), 0.05 * rng.normal());
    }
    path.push_back(path.front());
    geom::SimpleLoop loop;
    try {
      loop = geom::outer_boundary(path, 0.02);
    } catch (const geom::DegenerateLoop&) {
      continue;  // too thin to rasterize at this resolution
    }
    for (int q = 0; q < 50; ++q) {
      cd p(rng.uniform(-2, 2), rng.uniform(-2, 2));
      double d = geom::boundary_distance(loop, p);
      // Interior points' distance never exceeds half the diameter.
      if (geom::contains(loop, p)) CHECK(d <= 0.5 * loop.diameter + 1e-12);
      // hits_disk must be the predicate "boundary_distance <= eps".
      CHECK(geom::hits_disk(loop, p, 0.3) == (d <= 0.3));
    }
  }
}
