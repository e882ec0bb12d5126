#include "construct.hpp"

#include <algorithm>
#include <set>

#include "ptsem/errors.hpp"

namespace ptsem::construct {

SiteId add_grounded_site(Configuration& c, const Slot& slot, int slot_index,
                         int candidate_index, int max_semantic_bonds) {
  const Candidate& candidate = slot.candidates.at(candidate_index);
  Generator g = make_grounded(candidate.concept_id, *c.kg(), slot.id,
                              candidate.confidence,
                              static_cast<std::size_t>(max_semantic_bonds));
  auto& prov = std::get<GroundedProvenance>(g.provenance);
  prov.slot_index = slot_index;
  prov.role = slot.role;
  return c.add_site(std::move(g));
}

SiteId add_feature_support(Configuration& c, const Slot& slot, SiteId grounded) {
  SiteId feature = c.add_site(make_feature(slot.id));
  auto out_ref = c.find_open_bond(feature, BondDirection::Out, kFeatureBondValue);
  auto in_ref = c.find_open_bond(grounded, BondDirection::In, kFeatureBondValue);
  if (!out_ref || !in_ref) {
    throw StructureError("slot '" + slot.id + "' has no open support bond");
  }
  c.connect(*out_ref, *in_ref);
  return feature;
}

bool has_semantic_edge(const Configuration& c, SiteId from, SiteId to) {
  for (const ConfigEdge& e : c.edges()) {
    if (e.kind == EdgeKind::Semantic && e.from.site == from && e.to.site == to) {
      return true;
    }
  }
  return false;
}

bool close_direct(Configuration& c, SiteId from, SiteId to) {
  const std::string& ci = c.generator(from).concept_id;
  const std::string& cj = c.generator(to).concept_id;
  for (const NeighborEdge& a : c.kg()->assertions_between(ci, cj)) {
    auto out_ref = c.find_open_bond(from, BondDirection::Out, a.relation);
    auto in_ref = c.find_open_bond(to, BondDirection::In, a.relation);
    if (out_ref && in_ref) {
      c.connect(*out_ref, *in_ref);
      return true;
    }
  }
  return false;
}

bool attach_cue(Configuration& c, SiteId from, SiteId to,
                const std::string& cue_concept, CueProvenance prov,
                int max_semantic_bonds) {
  Generator cue = make_ungrounded(cue_concept, *c.kg(),
                                  static_cast<std::size_t>(max_semantic_bonds));
  if (cue.bonds.empty()) return false;  // degenerate: can never close anything
  cue.provenance = std::move(prov);
  SiteId cue_site = c.add_site(std::move(cue));
  if (close_direct(c, from, cue_site) && close_direct(c, cue_site, to)) {
    return true;
  }
  c.remove_site(cue_site);
  return false;
}

std::vector<SiteId> cue_sites_for_pair(const Configuration& c,
                                       const std::string& from_slot,
                                       const std::string& to_slot) {
  std::vector<SiteId> out;
  for (const Site& s : c.sites()) {
    if (s.gen.kind != GeneratorKind::Ungrounded) continue;
    const auto* prov = std::get_if<CueProvenance>(&s.gen.provenance);
    if (prov != nullptr && prov->from_slot == from_slot && prov->to_slot == to_slot) {
      out.push_back(s.id);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void link_pair(Configuration& c, const HypothesisSet& h,
               const std::vector<SlotSites>& sites, int i, int j,
               const InferenceParams& p) {
  const KnowledgeGraph& kg = *c.kg();
  SiteId from = sites[i].grounded;
  SiteId to = sites[j].grounded;
  const std::string ci = c.generator(from).concept_id;
  const std::string cj = c.generator(to).concept_id;

  if (kg.has_direct(ci, cj)) {
    if (!has_semantic_edge(c, from, to)) close_direct(c, from, to);
    return;
  }

  const std::string& from_slot = h.slots[i].id;
  const std::string& to_slot = h.slots[j].id;
  std::set<std::string> present;
  std::size_t count = 0;
  for (SiteId cue_site : cue_sites_for_pair(c, from_slot, to_slot)) {
    if (!has_semantic_edge(c, from, cue_site)) close_direct(c, from, cue_site);
    if (!has_semantic_edge(c, cue_site, to)) close_direct(c, cue_site, to);
    present.insert(c.generator(cue_site).concept_id);
    ++count;
  }
  if (count >= static_cast<std::size_t>(p.cues_per_pair)) return;

  for (const Cue& cue : kg.find_cues(ci, cj, p.cue_options())) {
    if (count >= static_cast<std::size_t>(p.cues_per_pair)) break;
    if (present.count(cue.concept_id) != 0) continue;
    CueProvenance prov{from_slot, to_slot, ci, cj};
    if (attach_cue(c, from, to, cue.concept_id, std::move(prov),
                   p.max_semantic_bonds)) {
      present.insert(cue.concept_id);
      ++count;
    }
  }
}

Configuration base_configuration(const HypothesisSet& h,
                                 std::shared_ptr<const KnowledgeGraph> kg,
                                 const InferenceParams& p,
                                 const std::vector<int>& assignment,
                                 std::vector<SlotSites>* sites_out) {
  if (assignment.size() != h.slots.size()) {
    throw Error("assignment size does not match slot count");
  }
  Configuration c(std::move(kg), p.energy_model());
  std::vector<SlotSites> sites(h.slots.size());
  for (std::size_t i = 0; i < h.slots.size(); ++i) {
    if (h.slots[i].candidates.empty()) {
      throw Error("slot '" + h.slots[i].id + "' has no candidates");
    }
    sites[i].grounded = add_grounded_site(c, h.slots[i], static_cast<int>(i),
                                          assignment[i], p.max_semantic_bonds);
    sites[i].feature = add_feature_support(c, h.slots[i], sites[i].grounded);
  }
  for (std::size_t i = 0; i < h.slots.size(); ++i) {
    for (std::size_t j = 0; j < h.slots.size(); ++j) {
      if (i == j) continue;
      link_pair(c, h, sites, static_cast<int>(i), static_cast<int>(j), p);
    }
  }
  if (sites_out != nullptr) *sites_out = std::move(sites);
  return c;
}

std::vector<SlotSites> locate_slot_sites(const Configuration& c,
                                         const HypothesisSet& h) {
  std::vector<SlotSites> sites(h.slots.size());
  for (const Site& s : c.sites()) {
    if (s.gen.kind == GeneratorKind::Grounded) {
      const auto* prov = std::get_if<GroundedProvenance>(&s.gen.provenance);
      if (prov != nullptr && prov->slot_index >= 0 &&
          prov->slot_index < static_cast<int>(sites.size())) {
        sites[prov->slot_index].grounded = s.id;
      }
    } else if (s.gen.kind == GeneratorKind::Feature) {
      const auto* prov = std::get_if<FeatureProvenance>(&s.gen.provenance);
      if (prov == nullptr) continue;
      for (std::size_t i = 0; i < h.slots.size(); ++i) {
        if (h.slots[i].id == prov->tag) {
          sites[i].feature = s.id;
          break;
        }
      }
    }
  }
  return sites;
}

}  // namespace ptsem::construct
