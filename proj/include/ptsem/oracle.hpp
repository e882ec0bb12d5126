#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ptsem/inference.hpp"

namespace ptsem {

struct OracleResult {
  std::vector<Interpretation> ranked;  // best first, deduplicated by key
  std::uint64_t space_size = 0;        // enumerated state count
};

// Exhaustive enumeration over every grounded assignment and, per
// non-directly-asserted ordered pair, every subset of its ranked cue list.
// Refuses with the computed state count when it exceeds `budget`.
OracleResult oracle_search(const HypothesisSet& h,
                           std::shared_ptr<const KnowledgeGraph> kg,
                           const InferenceParams& p, std::uint64_t budget);

}  // namespace ptsem
