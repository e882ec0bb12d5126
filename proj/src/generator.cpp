#include "ptsem/generator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>

#include "ptsem/errors.hpp"

namespace ptsem {

namespace {

std::uint64_t next_uid() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

// Neighbor edges of `concept_id` in one direction, one bond site per edge
// so that several neighbors sharing a relation can all couple at once.
// Ranked strongest |weight| first, then relation and neighbor name; the
// reserved "feature" value never becomes a semantic bond.
std::vector<std::string> ranked_edges(const std::string& concept_id,
                                      const KnowledgeGraph& kg,
                                      Direction direction, std::size_t cap) {
  std::vector<NeighborEdge> edges;
  for (const NeighborEdge& e : kg.neighbors(concept_id, direction)) {
    if (e.relation == kFeatureBondValue) continue;
    edges.push_back(e);
  }
  std::sort(edges.begin(), edges.end(), [](const NeighborEdge& a, const NeighborEdge& b) {
    double wa = std::fabs(a.weight);
    double wb = std::fabs(b.weight);
    if (wa != wb) return wa > wb;
    if (a.relation != b.relation) return a.relation < b.relation;
    return a.other < b.other;
  });
  if (edges.size() > cap) edges.resize(cap);
  std::vector<std::string> values;
  values.reserve(edges.size());
  for (const NeighborEdge& e : edges) values.push_back(e.relation);
  return values;
}

void append_semantic_bonds(Generator& g, const KnowledgeGraph& kg,
                           std::size_t max_per_direction) {
  int coord = static_cast<int>(g.bonds.size());
  for (const std::string& rel :
       ranked_edges(g.concept_id, kg, Direction::In, max_per_direction)) {
    g.bonds.push_back(Bond{coord++, BondDirection::In, rel});
  }
  for (const std::string& rel :
       ranked_edges(g.concept_id, kg, Direction::Out, max_per_direction)) {
    g.bonds.push_back(Bond{coord++, BondDirection::Out, rel});
  }
}

}  // namespace

const Bond* Generator::find_bond(int coordinate) const {
  for (const Bond& b : bonds)
    if (b.coordinate == coordinate) return &b;
  return nullptr;
}

Bond* Generator::find_bond(int coordinate) {
  for (Bond& b : bonds)
    if (b.coordinate == coordinate) return &b;
  return nullptr;
}

Generator make_feature(const std::string& tag) {
  if (tag.empty()) throw Error("feature tag must be non-empty");
  Generator g;
  g.uid = next_uid();
  g.kind = GeneratorKind::Feature;
  g.concept_id = tag;
  g.bonds.push_back(Bond{0, BondDirection::Out, kFeatureBondValue});
  g.provenance = FeatureProvenance{tag};
  return g;
}

Generator make_grounded(const std::string& concept_id, const KnowledgeGraph& kg,
                        const std::string& slot, double confidence,
                        std::size_t max_semantic_bonds) {
  if (!std::isfinite(confidence)) throw Error("confidence must be finite");
  Generator g;
  g.uid = next_uid();
  g.kind = GeneratorKind::Grounded;
  g.concept_id = concept_id;
  g.bonds.push_back(Bond{0, BondDirection::In, kFeatureBondValue});
  append_semantic_bonds(g, kg, max_semantic_bonds);
  g.provenance = GroundedProvenance{slot, 0, SlotRole::Other, confidence};
  return g;
}

Generator make_ungrounded(const std::string& concept_id, const KnowledgeGraph& kg,
                          std::size_t max_semantic_bonds) {
  Generator g;
  g.uid = next_uid();
  g.kind = GeneratorKind::Ungrounded;
  g.concept_id = concept_id;
  append_semantic_bonds(g, kg, max_semantic_bonds);
  g.provenance = CueProvenance{};
  return g;
}

double support_bond_energy(double confidence) { return std::tanh(confidence); }

std::vector<Bond> open_bonds(const Generator& g,
                             std::optional<BondDirection> direction) {
  std::vector<Bond> result;
  for (const Bond& b : g.bonds) {
    if (b.closed) continue;
    if (direction && b.direction != *direction) continue;
    result.push_back(b);
  }
  std::sort(result.begin(), result.end(),
            [](const Bond& a, const Bond& b) { return a.coordinate < b.coordinate; });
  return result;
}

const char* to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::Feature: return "feature";
    case GeneratorKind::Grounded: return "grounded";
    case GeneratorKind::Ungrounded: return "ungrounded";
  }
  return "?";
}

const char* to_string(BondDirection direction) {
  return direction == BondDirection::In ? "in" : "out";
}

const char* to_string(SlotRole role) {
  switch (role) {
    case SlotRole::Action: return "action";
    case SlotRole::Object: return "object";
    case SlotRole::Subject: return "subject";
    case SlotRole::Other: return "other";
  }
  return "?";
}

std::optional<SlotRole> parse_slot_role(const std::string& name) {
  if (name == "action") return SlotRole::Action;
  if (name == "object") return SlotRole::Object;
  if (name == "subject") return SlotRole::Subject;
  if (name == "other") return SlotRole::Other;
  return std::nullopt;
}

}  // namespace ptsem
