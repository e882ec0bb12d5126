#pragma once

// Shared builders used by both the annealer and the exhaustive search:
// slot instantiation, direct-assertion closure, and cue attachment with
// rollback. Keeping these in one place guarantees that both searchers
// explore the same configuration space.

#include <memory>
#include <string>
#include <vector>

#include "ptsem/configuration.hpp"
#include "ptsem/hypothesis.hpp"
#include "ptsem/inference.hpp"

namespace ptsem::construct {

struct SlotSites {
  SiteId grounded = kNoSite;
  SiteId feature = kNoSite;
};

// Grounded generator for slot.candidates[candidate_index], provenance
// filled with the slot's index and role.
SiteId add_grounded_site(Configuration& c, const Slot& slot, int slot_index,
                         int candidate_index, int max_semantic_bonds);

// Feature generator named after the slot, support bond closed onto the
// grounded site.
SiteId add_feature_support(Configuration& c, const Slot& slot, SiteId grounded);

bool has_semantic_edge(const Configuration& c, SiteId from, SiteId to);

// Closes the strongest closable assertion between the two sites' concepts
// (out-bond on `from`, in-bond on `to`). False when nothing closes.
bool close_direct(Configuration& c, SiteId from, SiteId to);

// Inserts an ungrounded cue bridging from -> cue -> to. Both legs must
// close or the site is rolled back.
bool attach_cue(Configuration& c, SiteId from, SiteId to,
                const std::string& cue_concept, CueProvenance prov,
                int max_semantic_bonds);

// Cue sites recorded for the ordered slot pair, ascending site id.
std::vector<SiteId> cue_sites_for_pair(const Configuration& c,
                                       const std::string& from_slot,
                                       const std::string& to_slot);

// Direct-or-cues treatment of one ordered grounded pair: close the direct
// assertion when one exists, otherwise re-close retained cues for the pair
// and top up to cues_per_pair from the ranked cue list.
void link_pair(Configuration& c, const HypothesisSet& h,
               const std::vector<SlotSites>& sites, int i, int j,
               const InferenceParams& p);

// Full build for one grounded assignment: slots, features, supports, then
// every ordered pair linked. assignment[i] indexes h.slots[i].candidates.
Configuration base_configuration(const HypothesisSet& h,
                                 std::shared_ptr<const KnowledgeGraph> kg,
                                 const InferenceParams& p,
                                 const std::vector<int>& assignment,
                                 std::vector<SlotSites>* sites_out = nullptr);

// Slot sites of an already-built configuration, matched by provenance.
std::vector<SlotSites> locate_slot_sites(const Configuration& c,
                                         const HypothesisSet& h);

}  // namespace ptsem::construct
