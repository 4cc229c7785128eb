#pragma once
// Verification suites: the deterministic checks (structure constants, twist
// normalization, block decomposition, central charge, generating-function
// oracle, dual block routes) and the sampled checks (two-point exponent,
// single-disk asymptotics, scaling covariance, exact-vs-MC three-point,
// cross-estimator agreement, lattice three-arm scaling). Tolerances live here,
// next to the checks that apply them.

#include <cstdint>
#include <string>
#include <vector>

#include "bls/harness/runrecord.hpp"

namespace bls::harness {

struct CriterionResult {
  int index = 0;  // 0 marks observational entries that never gate
  std::string name;
  std::vector<Comparison> checks;
  double seconds = 0;
  std::string note;

  bool pass() const;  // conjunction of the gating checks
};

struct VerifyReport {
  std::vector<CriterionResult> criteria;
  std::vector<QuantityResult> quantities;
  std::vector<std::pair<std::string, std::string>> artifacts;

  bool pass() const;
  // One line per criterion, failures and notes indented beneath.
  std::string format() const;
};

// Deterministic suite; independent of seed and budget.
VerifyReport verify_quick();

// Sampled suite. budget_scale multiplies every sample budget; the check
// tolerances that are stated in absolute terms do not move with it.
VerifyReport verify_full(std::uint64_t seed, double budget_scale);

}  // namespace bls::harness
