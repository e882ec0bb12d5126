#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace ptsem {

enum class Direction { In, Out };

// One weighted relational statement. Negative weights are meaningful: they
// mark incompatible concept pairs and later turn into negative bond energies.
struct Assertion {
  std::string relation;
  std::string start;
  std::string end;
  double weight = 0.0;
};

struct NeighborEdge {
  std::string relation;
  std::string other;
  double weight = 0.0;
};

struct Cue {
  std::string concept_id;
  double score = 0.0;  // tanh(phi(i,k)) + tanh(phi(k,j))
};

struct CueOptions {
  std::size_t limit = 3;  // mirrors the default cue budget per slot pair
  // Treat a direct assertion in *either* direction as disqualifying the
  // pair; default checks the forward direction only.
  bool strict_both_directions = false;
};

struct KgLoadOptions {
  // Relations whose reverse edge is materialized at load time.
  std::vector<std::string> symmetrize;
};

struct KgLoadReport {
  std::size_t assertions = 0;
  std::size_t merged_duplicates = 0;
};

// Immutable after load; concurrent read-only queries are safe.
class KnowledgeGraph {
 public:
  // TSV input: relation<TAB>start<TAB>end<TAB>weight, '#' comments allowed.
  // Duplicate (relation, start, end) triples are merged keeping the entry
  // with the largest |weight|.
  static KnowledgeGraph load(std::istream& in, const KgLoadOptions& options = {},
                             KgLoadReport* report = nullptr);
  static KnowledgeGraph load_file(const std::string& path,
                                  const KgLoadOptions& options = {},
                                  KgLoadReport* report = nullptr);

  KnowledgeGraph() = default;

  bool has_concept(const std::string& concept_id) const;
  bool has_direct(const std::string& from, const std::string& to) const;

  // phi: among all assertions from->to (any relation), the weight of maximum
  // absolute value, sign preserved; 0.0 when no assertion exists.
  double assertion_strength(const std::string& from, const std::string& to) const;

  // tanh(phi), strictly inside (-1, 1).
  double semantic_bond_energy(const std::string& from, const std::string& to) const;

  // Contextualization cues: concepts k with from->k and k->to assertions but
  // no direct from->to assertion. Empty when a direct assertion exists.
  // Ranked by tanh(phi(from,k)) + tanh(phi(k,to)) descending, ties broken
  // lexicographically on the cue id.
  std::vector<Cue> find_cues(const std::string& from, const std::string& to,
                             const CueOptions& options) const;

  // Deterministic ordering by (relation, other id). Empty for unknown ids.
  std::vector<NeighborEdge> neighbors(const std::string& concept_id,
                                      Direction direction) const;

  // All assertions from->to, ordered by |weight| descending then relation.
  std::vector<NeighborEdge> assertions_between(const std::string& from,
                                               const std::string& to) const;

  std::size_t concept_count() const { return concepts_.size(); }
  std::size_t assertion_count() const { return edges_.size(); }
  std::vector<Assertion> assertions() const;

 private:
  struct Edge {
    std::uint32_t relation = 0;
    std::uint32_t start = 0;
    std::uint32_t end = 0;
    double weight = 0.0;
  };

  std::uint32_t intern_concept(const std::string& id);
  std::uint32_t intern_relation(const std::string& name);
  int concept_index(const std::string& id) const;  // -1 when absent
  void build_indexes();
  static std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }

  std::vector<std::string> concepts_;
  std::unordered_map<std::string, std::uint32_t> concept_index_;
  std::vector<std::string> relations_;
  std::unordered_map<std::string, std::uint32_t> relation_index_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::uint32_t>> out_;  // edge ids per start concept
  std::vector<std::vector<std::uint32_t>> in_;   // edge ids per end concept
  // (start, end) -> edge id carrying the max-|weight| assertion.
  std::unordered_map<std::uint64_t, std::uint32_t> strongest_;
};

}  // namespace ptsem
