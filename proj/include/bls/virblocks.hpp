#pragma once
// Virasoro conformal blocks by the Gram-projector method, and the expansion of the
// exact reduced four-point function into them.
//
// Conventions: a level-K basis state is L_{-m1} L_{-m2} ... |h_p> with parts listed
// descending (m1 >= m2 >= ...). The vacuum module (h_p = 0) uses the quotient basis of
// partitions with all parts >= 2. The block series is
//   F(P|x) = x^{h_p - h3 - h4} (1 + sum_{K>=1} F_K x^K),
// normalized so the K = 0 coefficient is 1.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bls::vir {

using Partition = std::vector<int>;  // descending positive parts

// Partitions of n in canonical order: descending parts, lexicographically largest
// first: (n), (n-1,1), ... If min_part = 2 the list is the vacuum-module basis.
std::vector<Partition> partitions_of(int n, int min_part = 1);

// <h| L_{mu_s}...L_{mu_1} L_{-nu_1}...L_{-nu_t} |h> via commutator reduction.
// Exposed for the brute-force cross-checks in the tests.
double vacuum_expectation(const std::vector<int>& modes, double c, double h, bool vacuum_module);

// Gram (Shapovalov) matrix at level K over the canonical basis; row-major dim x dim.
// vacuum_module selects h = 0 with the parts >= 2 basis (the argument h is ignored
// in that case and taken as 0).
struct GramMatrix {
  int level = 0;
  std::vector<Partition> basis;
  std::vector<double> a;  // row-major, size basis.size()^2
  double& at(std::size_t i, std::size_t j) { return a[i * basis.size() + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * basis.size() + j]; }
};

GramMatrix gram_matrix(double c, double h, int level, bool vacuum_module = false);

// Vertex factor <h_p; mu| applied through a primary of weight h_i onto |h_j>:
//   prod_a [ h_p + sum_{b>a} m_b + m_a h_i - h_j ]
// with mu written in descending order, so the offset of each part is the level
// already accumulated by the parts closer to the primary.
double gamma_vertex(const Partition& mu, double h_p, double h_i, double h_j);

// Block coefficients F_0..F_Kmax for <h1| A_2(1) P_{h_p} A_3(x) |h4> with the
// channel weight h_p. h_p == 0 switches to the vacuum-module basis. Throws
// std::runtime_error naming the level if the Gram matrix is singular (degenerate
// module) at the 1e-10 relative pivot threshold.
std::vector<double> block_coeffs(double c, double h_p, double h1, double h2, double h3, double h4,
                                 int kmax);

// Same coefficients from the descent-equation construction of the channel states
// (solves the L_1/L_2 recursions for the OPE state instead of inverting the Gram
// matrix). Used as the independent cross-check route.
std::vector<double> block_coeffs_descent(double c, double h_p, double h1, double h2, double h3,
                                         double h4, int kmax);

// One lattice site of the decomposition: channel weights (p/3, p'/3) carry the product
// of chiral structure constants.
struct SpectrumEntry {
  int p = 0;
  int pbar = 0;
  double dim = 0;       // p/3 + pbar/3
  double product = 0;   // extracted C * C-bar product
  double residual = 0;  // |a - reconstruction| at the site's next descendant depth
};

struct SpectrumTable {
  double lambda = 0;
  double beta = 0;
  int kmax = 0;
  int max_p = 0;
  std::vector<SpectrumEntry> entries;  // ordered by (p + p', p)

  const SpectrumEntry* find(int p, int pbar) const;
};

// Coefficient a_{m,n} of x^{m/3} xbar^{n/3} in |x|^{4/3} G^{21}_{34}(x); exact series
// composition of the hypergeometric and binomial factors (no finite differences).
double g_series_coeff(double lambda, double beta, int m, int n);

// Expand the reduced four-point function over channel weights (p/3, p'/3), p,p' <= max_p.
SpectrumTable decompose_fourpoint(double lambda, double beta, int kmax, int max_p);

struct CentralChargeCheck {
  double raw_coeff = 0;    // a_{6,0}: the level-2 identity-descendant coefficient
  double c_recovered = 0;  // central charge solving the vacuum-block relation
};

// beta != 0 required (the coefficient vanishes at beta = 0).
CentralChargeCheck central_charge_check(double lambda, double beta);

}  // namespace bls::vir
