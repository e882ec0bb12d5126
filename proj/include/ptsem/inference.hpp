#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "ptsem/configuration.hpp"
#include "ptsem/hypothesis.hpp"
#include "ptsem/knowledge_graph.hpp"

namespace ptsem {

struct InferenceParams {
  int iterations = 2000;
  double initial_temperature = 2.0;
  double cooling_ratio = 0.995;
  double k_cost = 1.0;
  int m_swap = 4;
  int cues_per_pair = 3;
  int top_n = 10;
  std::uint64_t rng_seed = 0;
  double local_ratio = 0.8;
  int max_semantic_bonds = 10;
  int chains = 1;
  bool q_count_in_bonds = false;
  bool cues_strict = false;
  bool relatedto_wildcard = false;

  void validate() const;  // throws Error on out-of-range values
  EnergyModel energy_model() const;
  CueOptions cue_options() const;
};

enum class MoveKind { Local, Global };

struct TraceEntry {
  MoveKind kind = MoveKind::Local;
  double delta_e = 0.0;
  bool accepted = false;
  double temperature = 0.0;
};

struct Interpretation {
  Configuration config;
  double energy = 0.0;
  std::string key;
  bool connected = false;
};

struct SearchTrace {
  std::vector<TraceEntry> entries;
  double best_energy = 0.0;
};

struct AnnealResult {
  std::vector<Interpretation> ranked;
  SearchTrace trace;
};

// Identity of an interpretation: the per-slot grounded assignment plus the
// multiset of cue concepts. Energy-equal structural duplicates collapse
// under this key.
std::string configuration_key(const Configuration& c);

// Collects the best distinct configurations seen anywhere in a search,
// keeping the lowest energy per key. Rankings prefer configurations whose
// grounded generators are connected; when none are, ranking is
// unconstrained.
class BestTracker {
 public:
  explicit BestTracker(std::size_t soft_cap = 4096) : soft_cap_(soft_cap) {}

  void add(const Configuration& c);
  std::vector<Interpretation> top(std::size_t n) const;
  double best_energy() const { return best_energy_; }
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    double energy = 0.0;
    bool connected = false;
    Configuration config;
  };
  void prune();

  std::map<std::string, Entry> entries_;
  double best_energy_ = std::numeric_limits<double>::infinity();
  std::size_t soft_cap_;
};

// Starting state: one grounded generator per slot holding the slot's
// top-confidence candidate, a feature generator with its support bond
// closed, and every ordered grounded pair linked by its strongest direct
// assertion or by contextualization cues.
Configuration initialize_configuration(const HypothesisSet& h,
                                       std::shared_ptr<const KnowledgeGraph> kg,
                                       const InferenceParams& p);

// Greedy swap move: pick a grounded generator uniformly, sample up to
// m_swap alternative candidates from its slot, rebuild the neighborhood for
// each, and commit the energy-minimizing one. Ties prefer higher confidence
// then lexicographic concept order.
Configuration local_proposal(const Configuration& c, const HypothesisSet& h,
                             const InferenceParams& p, std::mt19937_64& rng);

// Structural move on cue generators: insert the next-ranked cue for an
// unsaturated pair, delete a cue, or rewire one to the next-ranked
// alternative. Inapplicable or failed moves return the input unchanged.
Configuration global_proposal(const Configuration& c, const HypothesisSet& h,
                              const InferenceParams& p, std::mt19937_64& rng);

// Simulated annealing with Metropolis acceptance and geometric cooling;
// every proposed configuration feeds the best-N collection. Multi-chain
// runs derive one sub-seed per chain and merge results deterministically.
AnnealResult anneal(const HypothesisSet& h, std::shared_ptr<const KnowledgeGraph> kg,
                    const InferenceParams& p);

}  // namespace ptsem
