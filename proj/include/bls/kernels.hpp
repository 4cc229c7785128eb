#pragma once
// Data-parallel inner loops of the Monte Carlo pipeline, in scalar reference and
// AVX2 variants selected once at startup.
//
// Both variants compute identical IEEE expression trees (no FMA contraction in either
// translation unit), and every reduction is order-insensitive (min/max, integer adds),
// so the equivalence tests require bit-exact agreement, not a tolerance.
//
// Layout contract: a polyline is two parallel arrays xs/ys of n vertices; its segments
// are the n-1 consecutive pairs. Closed polygons pass first == last vertex.

#include <cstddef>
#include <cstdint>

namespace bls::kern {

struct KernelOps {
  const char* name;

  // Per-query minimum squared distance to the polyline, k queries in one sweep.
  void (*min_dist_sq)(const double* xs, const double* ys, std::size_t n, const double* qx,
                      const double* qy, std::size_t k, double* out);

  // out = {xmin, xmax, ymin, ymax}; n >= 1.
  void (*bbox)(const double* xs, const double* ys, std::size_t n, double* out);

  // Number of polygon edges crossed by the horizontal ray from (qx,qy) towards +x,
  // half-open rule in y. Odd result = inside, for a simple closed polygon.
  std::uint64_t (*crossing_number)(const double* xs, const double* ys, std::size_t n, double qx,
                                   double qy);

  // Number of polyline segments strictly crossing segment (ax,ay)-(bx,by). Touching and
  // collinear overlaps do not count; callers use this on Brownian polylines where such
  // configurations have measure zero.
  std::uint64_t (*segment_crossings)(const double* xs, const double* ys, std::size_t n, double ax,
                                     double ay, double bx, double by);
};

// Active implementation: env BLS_KERNELS=scalar|avx2 wins, else CPU detection.
// The choice is made once and cached.
const KernelOps& kernels();

// Named lookup for the equivalence tests; nullptr if the variant is unavailable here.
const KernelOps* kernels_by_name(const char* name);

extern const KernelOps scalar_ops;

}  // namespace bls::kern
