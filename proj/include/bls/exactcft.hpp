#pragma once
// Closed-form CFT quantities: structure constants built from Gamma functions, the
// twisted two-point partition function, the mixed four-point function and its reduced
// one-variable form, and the conformal weights. Everything here is deterministic
// arithmetic; the Monte Carlo side only consumes these as reference values.

#include <complex>
#include <vector>

namespace bls::cft {

using cd = std::complex<double>;

// Real Gamma function (Lanczos, g = 7, 9-term set; reflection for x < 1/2).
// Non-positive integers throw.
double gamma_fn(double x);

// Gauss hypergeometric 2F1(a, b; c; z) for real parameters and complex z, by the
// defining series plus the Pfaff/Euler transformations (picked to minimize the series
// argument). Real z in (1, inf) throws (branch cut); z == 1 uses the Gauss summation
// value (requires c - a - b > 0). Absolute/relative truncation target 1e-14.
cd hyp2f1(double a, double b, double c, cd z);

// Taylor coefficients T_0..T_{nterms-1} of 2F1(a,b;c;x) around x = 0.
std::vector<double> hyp2f1_series_coeffs(double a, double b, double c, int nterms);

// Conformal weight of the layering-vertex operator: (lambda/10)(1 - cos beta).
double delta_layering(double lambda, double beta);

// Holomorphic weight of the order-k edge operator: k/3.
double delta_edge(int k = 1);

struct OpeConstants {
  double lambda = 0;
  double beta = 0;
  double central_charge = 0;    // c = 2 lambda
  double delta_layering = 0;    // (lambda/10)(1 - cos beta)
  double delta_edge = 0;        // 1/3
  double c_E_OO = 0;            // C^E_{OO} = -sqrt(lambda)(1-cos beta) K
  double c_E_EE = 0;            // C^E_{EE}, Gamma closed form, ~ 1/sqrt(lambda)
  double c_E2_EE = 0;           // C^{E(2)}_{EE} = sqrt(2)
  double c_E2_OO_sq = 0;        // (C^{E(2)}_{OO})^2 = (C^E_{OO})^4 / 2
  double c_Ebeta_OE_sq = 0;     // (C^{E_beta}_{OE})^2 = (1 + cos beta)/2
  double k_ratio = 0;           // K = c-tilde / c-hat, the 3-point normalization
  double c_t = 0;               // twist constant 4 G(2/3)^6 / (G(4/3)^2 G(1/3)^4)
  double c_g = 0;               // reduced-four-point constant, equals K^2
};

OpeConstants ope_constants(double lambda, double beta);

double c_E_OO(double lambda, double beta);
double c_E_EE(double lambda);

// alpha-hat for one edge insertion at z3 with a separation pair (z1 | z2) in the plane:
// K * |z12 / (z13 z23)|^{2/3}.
double alpha_hat_3pt(cd z1, cd z2, cd z3);

// Twisted partition-function part of <O O E E>; behaves like |z34|^{-4/3} as z4 -> z3.
// Pairwise-distinct points; cross ratio on [1, inf) throws.
double z_twist(cd z1, cd z2, cd z3, cd z4);

struct FourPointOOEE {
  double value = 0;
  // the three assembly terms, already including the global |z12|^{-4 delta} factor
  double sym_term = 0;    // (1+cos b)/2 channel
  double twist_term = 0;  // (1-cos b)/2 * Z_twist channel
  double sep_term = 0;    // lambda (1-cos b)^2 alpha-hat product channel
  cd cross_ratio;
  double z_twist_value = 0;
};

// <O_beta(z1) O_{-beta}(z2) E(z3) E(z4)> in the plane.
FourPointOOEE four_point_OOEE(double lambda, double beta, cd z1, cd z2, cd z3, cd z4);

// Reduced four-point G^{21}_{34}(x) (operators sent to (inf, 1, x, 0)).
double g_2134(double lambda, double beta, cd x);

struct GTermBreakdown {
  double value = 0;
  double const_term = 0;  // lambda C_g (1-cos b)^2 |1-x|^{-2/3}
  double sym_term = 0;
  double twist_term = 0;
};

GTermBreakdown g_2134_terms(double lambda, double beta, cd x);

}  // namespace bls::cft
