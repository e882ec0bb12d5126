#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ptsem/knowledge_graph.hpp"

namespace ptsem {

enum class GeneratorKind { Feature, Grounded, Ungrounded };
enum class BondDirection { In, Out };

// Reserved bond value linking a feature generator to a grounded one.
inline constexpr const char* kFeatureBondValue = "feature";

using SiteId = std::uint32_t;
inline constexpr SiteId kNoSite = 0xffffffffu;

// A typed, directed connection point. The closed state records the peer
// (a site id within the owning configuration) symmetrically on both sides.
struct Bond {
  int coordinate = 0;
  BondDirection direction = BondDirection::Out;
  std::string value;
  bool closed = false;
  SiteId peer_site = kNoSite;
  int peer_coordinate = -1;
};

enum class SlotRole { Action, Object, Subject, Other };

struct FeatureProvenance {
  std::string tag;
};

struct GroundedProvenance {
  std::string slot;
  int slot_index = 0;
  SlotRole role = SlotRole::Other;
  double confidence = 0.0;
};

// Originating cue query: the ordered slot pair this cue was inserted for.
struct CueProvenance {
  std::string from_slot;
  std::string to_slot;
  std::string from_concept;
  std::string to_concept;
};

using Provenance = std::variant<FeatureProvenance, GroundedProvenance, CueProvenance>;

struct Generator {
  std::uint64_t uid = 0;  // process-unique; identity and debugging only
  GeneratorKind kind = GeneratorKind::Feature;
  std::string concept_id;
  std::vector<Bond> bonds;  // arity is fixed at construction
  Provenance provenance;

  std::size_t arity() const { return bonds.size(); }
  const Bond* find_bond(int coordinate) const;
  Bond* find_bond(int coordinate);
};

// Feature generator: a single open out-bond carrying the "feature" value.
Generator make_feature(const std::string& tag);

// Grounded concept generator: one "feature" in-bond plus semantic bonds
// derived from the knowledge graph, one per neighbor edge, capped per
// direction keeping the strongest-|weight| edges first.
Generator make_grounded(const std::string& concept_id, const KnowledgeGraph& kg,
                        const std::string& slot, double confidence,
                        std::size_t max_semantic_bonds);

// Same bond derivation as make_grounded, without the feature bond.
Generator make_ungrounded(const std::string& concept_id, const KnowledgeGraph& kg,
                          std::size_t max_semantic_bonds);

// tanh of a classifier confidence score.
double support_bond_energy(double confidence);

// Open bonds of `g` matching the direction filter, ordered by coordinate.
std::vector<Bond> open_bonds(const Generator& g,
                             std::optional<BondDirection> direction = {});

const char* to_string(GeneratorKind kind);
const char* to_string(BondDirection direction);
const char* to_string(SlotRole role);
std::optional<SlotRole> parse_slot_role(const std::string& name);

}  // namespace ptsem
