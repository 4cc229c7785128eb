#pragma once
// Command dispatch: an ExperimentConfig runs one named pipeline (simulate,
// estimate, exact, blocks, perc, verify) and produces a RunRecord. Records are
// self-describing: comparisons are derived from the config and the stored
// quantities, so stored verdicts can be re-checked without re-simulation.

#include <string>
#include <vector>

#include "bls/harness/config.hpp"
#include "bls/harness/runrecord.hpp"

namespace bls::harness {

// Deterministic given (config, seed): byte-identical records modulo the
// timestamp fields.
RunRecord run_experiment(const ExperimentConfig& cfg);

// Comparison rows derivable from stored quantities alone (no sampling).
// The verify command carries its own criterion checks instead.
std::vector<Comparison> build_comparisons(const ExperimentConfig& cfg,
                                          const std::vector<QuantityResult>& quantities);

// Re-evaluates a stored record: config hash, every comparison verdict, and the
// aggregate pass flag must reproduce from the record's own contents.
bool reverify(const RunRecord& record);

// "<command>_<confighash>.json"; stable across reruns of one config.
std::string default_record_filename(const RunRecord& record);

}  // namespace bls::harness
