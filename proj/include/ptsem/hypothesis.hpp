#pragma once

#include <istream>
#include <string>
#include <vector>

#include "ptsem/generator.hpp"

namespace ptsem {

struct Candidate {
  std::string concept_id;
  double confidence = 0.0;
  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// One detector slot: a role plus candidate concepts, strongest first.
struct Slot {
  std::string id;
  SlotRole role = SlotRole::Other;
  std::vector<Candidate> candidates;
};

struct HypothesisSet {
  std::string segment;
  std::vector<Slot> slots;
};

struct HypothesisLoadOptions {
  // Candidates kept per slot after sorting by confidence.
  int k_max = 5;
};

// Reads one JSON object per non-blank line. Candidate lists are sorted by
// descending confidence (stable) and truncated to k_max.
std::vector<HypothesisSet> load_hypotheses(std::istream& in,
                                           const HypothesisLoadOptions& options = {});
std::vector<HypothesisSet> load_hypotheses_file(const std::string& path,
                                                const HypothesisLoadOptions& options = {});

}  // namespace ptsem
