#pragma once
// Outer-boundary extraction and the predicates the estimators need: disk hits,
// separation of point pairs, interior membership, diameter.

#include <complex>
#include <stdexcept>
#include <vector>

namespace bls::geom {

using cd = std::complex<double>;

struct DegenerateLoop : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BoundaryAmbiguity : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Simple closed polygon, positively oriented, vertices on the extraction grid.
// xs/ys are closed (front == back) and laid out for the SIMD kernels.
struct SimpleLoop {
  std::vector<double> xs, ys;
  double bbox[4] = {0, 0, 0, 0};  // minx, maxx, miny, maxy
  double diameter = 0;
  double grid_res = 0;

  std::size_t vertex_count() const { return xs.size(); }
};

// Max pairwise distance of a point set (convex hull + rotating calipers).
double diameter_points(const std::vector<double>& xs, const std::vector<double>& ys);

// Rasterizes the closed path at cell size `resolution` (bbox padded by 2 cells),
// flood-fills the exterior from the pad, and traces the boundary between exterior
// and non-exterior cells into a simple closed polygon. grid_cap bounds the grid
// side length; exceeding it throws (callers coarsen the resolution instead).
SimpleLoop outer_boundary(const std::vector<double>& path_xs, const std::vector<double>& path_ys,
                          double resolution, int grid_cap = 4096);
SimpleLoop outer_boundary(const std::vector<cd>& path, double resolution, int grid_cap = 4096);

// Closed-disk convention: true iff min distance from z to the boundary <= eps.
bool hits_disk(const SimpleLoop& loop, cd z, double eps);

// Even-odd interior test. No tolerance handling: points on the boundary follow
// the crossing-parity convention of the kernel.
bool contains(const SimpleLoop& loop, cd z);

// Distance from z to the boundary polygon.
double boundary_distance(const SimpleLoop& loop, cd z);

// True iff exactly one of z1, z2 is interior. Throws BoundaryAmbiguity if either
// point is within grid_res of the boundary; estimation code that can tolerate the
// O(grid_res) uncertainty uses separates_relaxed instead.
bool separates(const SimpleLoop& loop, cd z1, cd z2);
bool separates_relaxed(const SimpleLoop& loop, cd z1, cd z2);

double diameter(const SimpleLoop& loop);

// CSV dump (x,y per line, closed) for external plotting.
std::string to_csv(const SimpleLoop& loop);

}  // namespace bls::geom
