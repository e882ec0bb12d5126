#include "ptsem/oracle.hpp"

#include <limits>
#include <string>
#include <vector>

#include "construct.hpp"
#include "ptsem/errors.hpp"

namespace ptsem {
namespace {

constexpr std::uint64_t kCountCeiling = std::numeric_limits<std::uint64_t>::max() / 2;

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > kCountCeiling / a) return kCountCeiling;
  return a * b;
}

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  if (a > kCountCeiling - b) return kCountCeiling;
  return a + b;
}

struct PairPool {
  int from_slot;
  int to_slot;
  std::vector<std::string> cue_concepts;  // rank order
};

// Cue pools for every ordered, non-direct pair under one assignment.
std::vector<PairPool> pair_pools(const HypothesisSet& h, const KnowledgeGraph& kg,
                                 const InferenceParams& p,
                                 const std::vector<int>& assignment) {
  std::vector<PairPool> pools;
  if (p.cues_per_pair == 0) return pools;
  for (std::size_t i = 0; i < h.slots.size(); ++i) {
    for (std::size_t j = 0; j < h.slots.size(); ++j) {
      if (i == j) continue;
      const std::string& ci = h.slots[i].candidates[assignment[i]].concept_id;
      const std::string& cj = h.slots[j].candidates[assignment[j]].concept_id;
      if (kg.has_direct(ci, cj)) continue;
      PairPool pool{static_cast<int>(i), static_cast<int>(j), {}};
      for (const Cue& cue : kg.find_cues(ci, cj, p.cue_options())) {
        pool.cue_concepts.push_back(cue.concept_id);
      }
      if (!pool.cue_concepts.empty()) pools.push_back(std::move(pool));
    }
  }
  return pools;
}

bool next_assignment(std::vector<int>& assignment, const HypothesisSet& h) {
  for (std::size_t i = assignment.size(); i-- > 0;) {
    if (assignment[i] + 1 < static_cast<int>(h.slots[i].candidates.size())) {
      ++assignment[i];
      std::fill(assignment.begin() + i + 1, assignment.end(), 0);
      return true;
    }
  }
  return false;
}

bool next_masks(std::vector<std::uint32_t>& masks, const std::vector<PairPool>& pools) {
  for (std::size_t i = masks.size(); i-- > 0;) {
    std::uint32_t limit = 1u << pools[i].cue_concepts.size();
    if (masks[i] + 1 < limit) {
      ++masks[i];
      std::fill(masks.begin() + i + 1, masks.end(), 0u);
      return true;
    }
  }
  return false;
}

}  // namespace

OracleResult oracle_search(const HypothesisSet& h,
                           std::shared_ptr<const KnowledgeGraph> kg,
                           const InferenceParams& p, std::uint64_t budget) {
  p.validate();
  if (budget == 0) throw Error("budget must be positive");
  if (h.slots.empty()) throw Error("hypothesis set has no slots");
  for (const Slot& slot : h.slots) {
    if (slot.candidates.empty()) throw Error("slot '" + slot.id + "' has no candidates");
  }

  std::uint64_t assignments = 1;
  for (const Slot& slot : h.slots) {
    assignments = saturating_mul(assignments, slot.candidates.size());
  }
  // Refusals report the exact space size, so the budget is only checked
  // against the full pool-expanded sum below. The sole exception is a count
  // too large to even tally, where the saturated value stands in for it.
  if (assignments >= kCountCeiling && assignments > budget) {
    throw BudgetError(assignments, budget);
  }

  std::uint64_t total = 0;
  {
    std::vector<int> assignment(h.slots.size(), 0);
    do {
      std::uint64_t per_assignment = 1;
      for (const PairPool& pool : pair_pools(h, *kg, p, assignment)) {
        per_assignment = saturating_mul(
            per_assignment, std::uint64_t{1} << pool.cue_concepts.size());
      }
      total = saturating_add(total, per_assignment);
    } while (next_assignment(assignment, h));
    // A refusal always reports the exact space size, so the full sum is
    // computed even once the budget is already exceeded.
    if (total > budget) throw BudgetError(total, budget);
  }

  // Cue subsets are attached on top of a cue-free base; disabling the
  // automatic top-up keeps link_pair from inserting cues on its own.
  InferenceParams base_params = p;
  base_params.cues_per_pair = 0;

  BestTracker tracker(std::numeric_limits<std::size_t>::max());
  std::vector<int> assignment(h.slots.size(), 0);
  do {
    std::vector<PairPool> pools = pair_pools(h, *kg, p, assignment);
    std::vector<std::uint32_t> masks(pools.size(), 0);
    do {
      std::vector<construct::SlotSites> sites;
      Configuration c =
          construct::base_configuration(h, kg, base_params, assignment, &sites);
      for (std::size_t pi = 0; pi < pools.size(); ++pi) {
        const PairPool& pool = pools[pi];
        SiteId from = sites[pool.from_slot].grounded;
        SiteId to = sites[pool.to_slot].grounded;
        // Copies: attach_cue grows the site vector and would invalidate
        // references into it.
        const std::string ci = c.generator(from).concept_id;
        const std::string cj = c.generator(to).concept_id;
        for (std::size_t bit = 0; bit < pool.cue_concepts.size(); ++bit) {
          if ((masks[pi] & (1u << bit)) == 0) continue;
          CueProvenance prov{h.slots[pool.from_slot].id, h.slots[pool.to_slot].id,
                             ci, cj};
          construct::attach_cue(c, from, to, pool.cue_concepts[bit],
                                std::move(prov), p.max_semantic_bonds);
        }
      }
      tracker.add(c);
    } while (next_masks(masks, pools));
  } while (next_assignment(assignment, h));

  OracleResult result;
  result.ranked = tracker.top(tracker.size());
  result.space_size = total;
  return result;
}

}  // namespace ptsem
