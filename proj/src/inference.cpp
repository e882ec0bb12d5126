#include "ptsem/inference.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "construct.hpp"
#include "ptsem/errors.hpp"
#include "ptsem/rng.hpp"

namespace ptsem {

void InferenceParams::validate() const {
  if (iterations < 1) throw Error("iterations must be positive");
  if (!(initial_temperature > 0.0) || !std::isfinite(initial_temperature)) {
    throw Error("initial temperature must be positive and finite");
  }
  // cooling_ratio 1.0 keeps the temperature fixed (constant-temperature runs).
  if (!(cooling_ratio > 0.0) || !(cooling_ratio <= 1.0)) {
    throw Error("cooling ratio must lie in (0, 1]");
  }
  if (k_cost < 0.0 || !std::isfinite(k_cost)) {
    throw Error("open-bond cost must be nonnegative and finite");
  }
  if (m_swap < 1) throw Error("swap set size must be positive");
  if (cues_per_pair < 0) throw Error("cues per pair must be nonnegative");
  if (top_n < 1) throw Error("top-n must be positive");
  if (local_ratio < 0.0 || local_ratio > 1.0) {
    throw Error("local proposal ratio must lie in [0, 1]");
  }
  if (max_semantic_bonds < 1) throw Error("semantic bond cap must be positive");
  if (chains < 1) throw Error("chain count must be positive");
}

EnergyModel InferenceParams::energy_model() const {
  EnergyModel model;
  model.k_cost = k_cost;
  model.q_count_in_bonds = q_count_in_bonds;
  model.relatedto_wildcard = relatedto_wildcard;
  return model;
}

CueOptions InferenceParams::cue_options() const {
  CueOptions options;
  options.limit = static_cast<std::size_t>(std::max(cues_per_pair, 1));
  options.strict_both_directions = cues_strict;
  return options;
}

std::string configuration_key(const Configuration& c) {
  struct GroundedEntry {
    int slot_index;
    std::string slot;
    std::string concept_id;
  };
  std::vector<GroundedEntry> grounded;
  std::vector<std::string> cues;
  for (const Site& s : c.sites()) {
    if (s.gen.kind == GeneratorKind::Grounded) {
      GroundedEntry entry{0, {}, s.gen.concept_id};
      if (const auto* p = std::get_if<GroundedProvenance>(&s.gen.provenance)) {
        entry.slot_index = p->slot_index;
        entry.slot = p->slot;
      }
      grounded.push_back(std::move(entry));
    } else if (s.gen.kind == GeneratorKind::Ungrounded) {
      cues.push_back(s.gen.concept_id);
    }
  }
  std::sort(grounded.begin(), grounded.end(),
            [](const GroundedEntry& a, const GroundedEntry& b) {
              return std::tie(a.slot_index, a.slot, a.concept_id) <
                     std::tie(b.slot_index, b.slot, b.concept_id);
            });
  std::sort(cues.begin(), cues.end());

  std::ostringstream key;
  key << "G:";
  for (std::size_t i = 0; i < grounded.size(); ++i) {
    if (i > 0) key << '|';
    key << grounded[i].slot << '=' << grounded[i].concept_id;
  }
  key << ";C:";
  for (std::size_t i = 0; i < cues.size(); ++i) {
    if (i > 0) key << ',';
    key << cues[i];
  }
  return key.str();
}

void BestTracker::add(const Configuration& c) {
  double energy = c.energy().total;
  best_energy_ = std::min(best_energy_, energy);
  std::string key = configuration_key(c);
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    entries_.emplace(std::move(key), Entry{energy, c.grounded_connected(), c});
    if (entries_.size() > soft_cap_) prune();
  } else if (energy < it->second.energy) {
    it->second = Entry{energy, c.grounded_connected(), c};
  }
}

void BestTracker::prune() {
  // Trim to 3/4 capacity, shedding disconnected entries first, worst energy
  // first. The scalar best seen so far is tracked separately and survives.
  struct Rank {
    bool disconnected;
    double energy;
    const std::string* key;
  };
  std::vector<Rank> ranks;
  ranks.reserve(entries_.size());
  for (const auto& [key, entry] : entries_) {
    ranks.push_back({!entry.connected, entry.energy, &key});
  }
  std::sort(ranks.begin(), ranks.end(), [](const Rank& a, const Rank& b) {
    return std::tie(a.disconnected, a.energy, *a.key) <
           std::tie(b.disconnected, b.energy, *b.key);
  });
  std::size_t keep = soft_cap_ * 3 / 4;
  for (std::size_t i = keep; i < ranks.size(); ++i) {
    entries_.erase(*ranks[i].key);
  }
}

std::vector<Interpretation> BestTracker::top(std::size_t n) const {
  struct Rank {
    double energy;
    const std::string* key;
    const Entry* entry;
  };
  std::vector<Rank> pool;
  for (const auto& [key, entry] : entries_) {
    if (entry.connected) pool.push_back({entry.energy, &key, &entry});
  }
  if (pool.empty()) {
    for (const auto& [key, entry] : entries_) {
      pool.push_back({entry.energy, &key, &entry});
    }
  }
  std::sort(pool.begin(), pool.end(), [](const Rank& a, const Rank& b) {
    return std::tie(a.energy, *a.key) < std::tie(b.energy, *b.key);
  });
  if (pool.size() > n) pool.resize(n);
  std::vector<Interpretation> out;
  out.reserve(pool.size());
  for (const Rank& r : pool) {
    out.push_back({r.entry->config, r.energy, *r.key, r.entry->connected});
  }
  return out;
}

Configuration initialize_configuration(const HypothesisSet& h,
                                       std::shared_ptr<const KnowledgeGraph> kg,
                                       const InferenceParams& p) {
  if (h.slots.empty()) throw Error("hypothesis set has no slots");
  std::vector<int> assignment(h.slots.size(), 0);
  return construct::base_configuration(h, std::move(kg), p, assignment);
}

Configuration local_proposal(const Configuration& c, const HypothesisSet& h,
                             const InferenceParams& p, std::mt19937_64& rng) {
  auto sites = construct::locate_slot_sites(c, h);
  std::vector<int> populated;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (sites[i].grounded != kNoSite) populated.push_back(static_cast<int>(i));
  }
  if (populated.empty()) return c;

  std::uniform_int_distribution<std::size_t> pick_slot(0, populated.size() - 1);
  int si = populated[pick_slot(rng)];
  const Slot& slot = h.slots[si];
  SiteId victim = sites[si].grounded;
  const std::string current = c.generator(victim).concept_id;

  std::vector<int> alternatives;
  for (std::size_t k = 0; k < slot.candidates.size(); ++k) {
    if (slot.candidates[k].concept_id != current) {
      alternatives.push_back(static_cast<int>(k));
    }
  }
  if (alternatives.empty()) return c;

  std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(p.m_swap),
                                        alternatives.size());
  for (std::size_t t = 0; t < m; ++t) {
    std::uniform_int_distribution<std::size_t> pick(t, alternatives.size() - 1);
    std::swap(alternatives[t], alternatives[pick(rng)]);
  }
  alternatives.resize(m);
  std::sort(alternatives.begin(), alternatives.end());

  // Cues derived for any pair touching this slot are dropped and re-derived
  // against the new concept; pairs between other slots keep theirs.
  Configuration base = c;
  std::vector<SiteId> stale;
  for (const Site& s : base.sites()) {
    if (s.gen.kind != GeneratorKind::Ungrounded) continue;
    const auto* prov = std::get_if<CueProvenance>(&s.gen.provenance);
    if (prov != nullptr &&
        (prov->from_slot == slot.id || prov->to_slot == slot.id)) {
      stale.push_back(s.id);
    }
  }
  for (SiteId cue_site : stale) base.remove_site(cue_site);
  base.remove_site(victim);

  const std::size_t slot_count = h.slots.size();
  bool have_best = false;
  Configuration best;
  double best_energy = 0.0;
  double best_confidence = 0.0;
  std::string best_concept;
  for (int candidate_index : alternatives) {
    Configuration trial = base;
    auto trial_sites = sites;
    trial_sites[si].grounded = construct::add_grounded_site(
        trial, slot, si, candidate_index, p.max_semantic_bonds);
    if (trial_sites[si].feature != kNoSite) {
      auto out_ref = trial.find_open_bond(trial_sites[si].feature,
                                          BondDirection::Out, kFeatureBondValue);
      auto in_ref = trial.find_open_bond(trial_sites[si].grounded,
                                         BondDirection::In, kFeatureBondValue);
      if (out_ref && in_ref) trial.connect(*out_ref, *in_ref);
    }
    for (std::size_t a = 0; a < slot_count; ++a) {
      for (std::size_t b = 0; b < slot_count; ++b) {
        if (a == b) continue;
        if (static_cast<int>(a) != si && static_cast<int>(b) != si) continue;
        if (trial_sites[a].grounded == kNoSite || trial_sites[b].grounded == kNoSite) {
          continue;
        }
        construct::link_pair(trial, h, trial_sites, static_cast<int>(a),
                             static_cast<int>(b), p);
      }
    }
    double energy = trial.energy().total;
    double confidence = slot.candidates[candidate_index].confidence;
    const std::string& concept_id = slot.candidates[candidate_index].concept_id;
    bool better = !have_best || energy < best_energy ||
                  (energy == best_energy &&
                   (confidence > best_confidence ||
                    (confidence == best_confidence && concept_id < best_concept)));
    if (better) {
      best = std::move(trial);
      best_energy = energy;
      best_confidence = confidence;
      best_concept = concept_id;
      have_best = true;
    }
  }
  return have_best ? best : c;
}

Configuration global_proposal(const Configuration& c, const HypothesisSet& h,
                              const InferenceParams& p, std::mt19937_64& rng) {
  enum class Move { Insert, Delete, Rewire };
  const KnowledgeGraph& kg = *c.kg();
  auto sites = construct::locate_slot_sites(c, h);

  std::vector<SiteId> cue_sites;
  for (const Site& s : c.sites()) {
    if (s.gen.kind == GeneratorKind::Ungrounded) cue_sites.push_back(s.id);
  }
  std::sort(cue_sites.begin(), cue_sites.end());

  std::vector<std::pair<int, int>> unsaturated;
  for (std::size_t i = 0; i < h.slots.size(); ++i) {
    for (std::size_t j = 0; j < h.slots.size(); ++j) {
      if (i == j) continue;
      if (sites[i].grounded == kNoSite || sites[j].grounded == kNoSite) continue;
      auto existing = construct::cue_sites_for_pair(c, h.slots[i].id, h.slots[j].id);
      if (existing.size() < static_cast<std::size_t>(p.cues_per_pair)) {
        unsaturated.emplace_back(static_cast<int>(i), static_cast<int>(j));
      }
    }
  }

  std::vector<Move> applicable;
  if (!unsaturated.empty() && p.cues_per_pair > 0) applicable.push_back(Move::Insert);
  if (!cue_sites.empty()) applicable.push_back(Move::Delete);
  if (!cue_sites.empty()) applicable.push_back(Move::Rewire);
  if (applicable.empty()) return c;

  std::uniform_int_distribution<std::size_t> pick_kind(0, applicable.size() - 1);
  Move move = applicable[pick_kind(rng)];

  if (move == Move::Insert) {
    std::uniform_int_distribution<std::size_t> pick_pair(0, unsaturated.size() - 1);
    auto [i, j] = unsaturated[pick_pair(rng)];
    SiteId from = sites[i].grounded;
    SiteId to = sites[j].grounded;
    const std::string ci = c.generator(from).concept_id;
    const std::string cj = c.generator(to).concept_id;
    std::set<std::string> present;
    for (SiteId s : construct::cue_sites_for_pair(c, h.slots[i].id, h.slots[j].id)) {
      present.insert(c.generator(s).concept_id);
    }
    Configuration next = c;
    for (const Cue& cue : kg.find_cues(ci, cj, p.cue_options())) {
      if (present.count(cue.concept_id) != 0) continue;
      CueProvenance prov{h.slots[i].id, h.slots[j].id, ci, cj};
      if (construct::attach_cue(next, from, to, cue.concept_id, std::move(prov),
                                p.max_semantic_bonds)) {
        return next;
      }
    }
    return c;
  }

  std::uniform_int_distribution<std::size_t> pick_cue(0, cue_sites.size() - 1);
  SiteId victim = cue_sites[pick_cue(rng)];

  if (move == Move::Delete) {
    Configuration next = c;
    next.remove_site(victim);
    return next;
  }

  // Rewire: replace the victim with the best-ranked unused cue of its pair.
  const auto* prov = std::get_if<CueProvenance>(&c.generator(victim).provenance);
  if (prov == nullptr) return c;
  int i = -1;
  int j = -1;
  for (std::size_t s = 0; s < h.slots.size(); ++s) {
    if (h.slots[s].id == prov->from_slot) i = static_cast<int>(s);
    if (h.slots[s].id == prov->to_slot) j = static_cast<int>(s);
  }
  if (i < 0 || j < 0 || sites[i].grounded == kNoSite || sites[j].grounded == kNoSite) {
    return c;
  }
  SiteId from = sites[i].grounded;
  SiteId to = sites[j].grounded;
  const std::string ci = c.generator(from).concept_id;
  const std::string cj = c.generator(to).concept_id;
  const std::string victim_concept = c.generator(victim).concept_id;

  Configuration next = c;
  next.remove_site(victim);
  std::set<std::string> present{victim_concept};
  for (SiteId s : construct::cue_sites_for_pair(next, prov->from_slot, prov->to_slot)) {
    present.insert(next.generator(s).concept_id);
  }
  for (const Cue& cue : kg.find_cues(ci, cj, p.cue_options())) {
    if (present.count(cue.concept_id) != 0) continue;
    CueProvenance fresh{prov->from_slot, prov->to_slot, ci, cj};
    if (construct::attach_cue(next, from, to, cue.concept_id, std::move(fresh),
                              p.max_semantic_bonds)) {
      return next;
    }
  }
  return c;
}

namespace {

void run_chain(const HypothesisSet& h, std::shared_ptr<const KnowledgeGraph> kg,
               const InferenceParams& p, std::uint64_t seed, BestTracker& tracker,
               SearchTrace& trace) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Configuration current = initialize_configuration(h, kg, p);
  tracker.add(current);
  double current_energy = current.energy().total;
  double temperature = p.initial_temperature;
  for (int iter = 0; iter < p.iterations; ++iter) {
    MoveKind kind = unit(rng) < p.local_ratio ? MoveKind::Local : MoveKind::Global;
    Configuration proposal = kind == MoveKind::Local
                                 ? local_proposal(current, h, p, rng)
                                 : global_proposal(current, h, p, rng);
#ifndef NDEBUG
    if (auto violations = proposal.validate(); !violations.empty()) {
      throw StructureError("proposal failed validation: " + violations.front());
    }
#endif
    double proposal_energy = proposal.energy().total;
    tracker.add(proposal);
    double delta = proposal_energy - current_energy;
    bool accepted = delta <= 0.0 || unit(rng) < std::exp(-delta / temperature);
    trace.entries.push_back({kind, delta, accepted, temperature});
    if (accepted) {
      current = std::move(proposal);
      current_energy = proposal_energy;
    }
    temperature *= p.cooling_ratio;
  }
}

}  // namespace

AnnealResult anneal(const HypothesisSet& h, std::shared_ptr<const KnowledgeGraph> kg,
                    const InferenceParams& p) {
  p.validate();
  BestTracker tracker;
  SearchTrace trace;
  if (p.chains == 1) {
    run_chain(h, kg, p, p.rng_seed, tracker, trace);
  } else {
    for (int chain = 0; chain < p.chains; ++chain) {
      run_chain(h, kg, p, derive_seed(p.rng_seed, static_cast<std::uint64_t>(chain)),
                tracker, trace);
    }
  }
  AnnealResult result;
  result.ranked = tracker.top(static_cast<std::size_t>(p.top_n));
  result.trace = std::move(trace);
  result.trace.best_energy = tracker.best_energy();
  return result;
}

}  // namespace ptsem
