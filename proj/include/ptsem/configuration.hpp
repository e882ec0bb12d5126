#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ptsem/generator.hpp"
#include "ptsem/knowledge_graph.hpp"

namespace ptsem {

struct BondRef {
  SiteId site = kNoSite;
  int coordinate = -1;
  friend bool operator==(const BondRef&, const BondRef&) = default;
};

enum class EdgeKind { Support, Semantic };

// A closed bond pair: `from` is always the out-bond endpoint.
struct ConfigEdge {
  BondRef from;
  BondRef to;
  std::string value;
  EdgeKind kind = EdgeKind::Semantic;
  double energy = 0.0;
};

// total = -(support_sum + semantic_sum) + q_cost
struct EnergyBreakdown {
  double support_sum = 0.0;
  double semantic_sum = 0.0;
  double q_cost = 0.0;
  double total = 0.0;
};

struct EnergyModel {
  double k_cost = 1.0;
  // Alternative reading of the ungrounded cost: also charge open in-bonds.
  bool q_count_in_bonds = false;
  // Relaxed closure matching: "RelatedTo" pairs with any semantic value.
  bool relatedto_wildcard = false;
};

struct Site {
  SiteId id = kNoSite;
  Generator gen;
};

// A connector graph populated with generators. Single-owner mutable state;
// copies are independent. The energy breakdown is maintained incrementally
// and cross-checked against a full recomputation in debug builds.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::shared_ptr<const KnowledgeGraph> kg,
                         EnergyModel model = {});

  SiteId add_site(Generator g);
  void remove_site(SiteId site);

  // Closes an open out-bond with an open in-bond. Values must match (or
  // satisfy the wildcard rule); "feature" bonds couple feature->grounded,
  // semantic bonds couple grounded/ungrounded generators.
  void connect(const BondRef& out_ref, const BondRef& in_ref);

  // Reopens the edge incident to `endpoint` on both sides.
  void disconnect(const BondRef& endpoint);

  bool has_site(SiteId site) const;
  const Generator& generator(SiteId site) const;
  const std::vector<Site>& sites() const { return sites_; }
  const std::vector<ConfigEdge>& edges() const { return edges_; }
  const Bond& bond(const BondRef& ref) const;
  bool empty() const { return sites_.empty(); }

  std::vector<BondRef> open_site_bonds(SiteId site,
                                       std::optional<BondDirection> dir = {}) const;
  std::optional<BondRef> find_open_bond(SiteId site, BondDirection dir,
                                        const std::string& value) const;

  double cost_q() const;
  double cost_q(double k) const;
  double cost_q(double k, bool count_in_bonds) const;
  EnergyBreakdown energy() const;
  EnergyBreakdown energy(double k) const;
  EnergyBreakdown energy(double k, bool count_in_bonds) const;
  double probability_weight() const;

  // Full recomputation from structure; the oracle for the incremental cache.
  EnergyBreakdown recompute() const;

  // Empty iff all structural invariants hold. Violations are data.
  std::vector<std::string> validate() const;

  // True when the grounded generators form one component under semantic
  // edges (cues count as bridges). Admissibility rule for final rankings.
  bool grounded_connected() const;

  struct ContentItem {
    std::string concept_id;
    GeneratorKind kind = GeneratorKind::Grounded;
  };
  // Grounded concepts in slot order, each cue following the last grounded
  // generator it attaches to.
  std::vector<ContentItem> semantic_content() const;

  int open_ungrounded_out() const { return open_ungrounded_out_; }
  int open_ungrounded_in() const { return open_ungrounded_in_; }
  const EnergyModel& model() const { return model_; }
  const std::shared_ptr<const KnowledgeGraph>& kg() const { return kg_; }

  // Rebuild from serialized parts, trusting stored edge energies. Used by
  // deserialization, where no knowledge graph is attached.
  static Configuration restore(std::vector<Site> sites, std::vector<ConfigEdge> edges,
                               EnergyModel model,
                               std::shared_ptr<const KnowledgeGraph> kg = nullptr);

 private:
  friend struct ConfigurationTestAccess;

  Site* find_site(SiteId site);
  const Site* find_site_const(SiteId site) const;
  Bond* find_bond(const BondRef& ref);
  double edge_energy(const Generator& from_gen, const Generator& to_gen,
                     EdgeKind kind) const;
  void count_open(const Generator& g, int* out_count, int* in_count) const;
  void debug_check() const;

  std::vector<Site> sites_;
  std::vector<ConfigEdge> edges_;
  std::shared_ptr<const KnowledgeGraph> kg_;
  EnergyModel model_;
  double support_sum_ = 0.0;
  double semantic_sum_ = 0.0;
  int open_ungrounded_out_ = 0;
  int open_ungrounded_in_ = 0;
  SiteId next_site_ = 0;
};

}  // namespace ptsem
