#include "ptsem/configuration.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "ptsem/errors.hpp"

namespace ptsem {
namespace {

constexpr double kEnergyTolerance = 1e-9;
constexpr const char* kWildcardRelation = "RelatedTo";

bool is_semantic_kind(GeneratorKind k) {
  return k == GeneratorKind::Grounded || k == GeneratorKind::Ungrounded;
}

bool values_compatible(const std::string& a, const std::string& b, bool wildcard) {
  if (a == b) return true;
  if (!wildcard) return false;
  if (a == kFeatureBondValue || b == kFeatureBondValue) return false;
  return a == kWildcardRelation || b == kWildcardRelation;
}

std::string ref_string(const BondRef& ref) {
  std::ostringstream out;
  out << "site " << ref.site << " coordinate " << ref.coordinate;
  return out.str();
}

}  // namespace

Configuration::Configuration(std::shared_ptr<const KnowledgeGraph> kg,
                             EnergyModel model)
    : kg_(std::move(kg)), model_(model) {}

Site* Configuration::find_site(SiteId site) {
  for (auto& s : sites_) {
    if (s.id == site) return &s;
  }
  return nullptr;
}

const Site* Configuration::find_site_const(SiteId site) const {
  for (const auto& s : sites_) {
    if (s.id == site) return &s;
  }
  return nullptr;
}

Bond* Configuration::find_bond(const BondRef& ref) {
  Site* s = find_site(ref.site);
  if (s == nullptr) return nullptr;
  return s->gen.find_bond(ref.coordinate);
}

bool Configuration::has_site(SiteId site) const {
  return find_site_const(site) != nullptr;
}

const Generator& Configuration::generator(SiteId site) const {
  const Site* s = find_site_const(site);
  if (s == nullptr) throw StructureError("no such site: " + std::to_string(site));
  return s->gen;
}

const Bond& Configuration::bond(const BondRef& ref) const {
  const Site* s = find_site_const(ref.site);
  if (s == nullptr) throw StructureError("no such site: " + std::to_string(ref.site));
  const Bond* b = s->gen.find_bond(ref.coordinate);
  if (b == nullptr) throw StructureError("no bond at " + ref_string(ref));
  return *b;
}

void Configuration::count_open(const Generator& g, int* out_count,
                               int* in_count) const {
  for (const auto& b : g.bonds) {
    if (b.closed) continue;
    if (b.direction == BondDirection::Out) {
      ++*out_count;
    } else {
      ++*in_count;
    }
  }
}

SiteId Configuration::add_site(Generator g) {
  for (const auto& b : g.bonds) {
    if (b.closed) throw StructureError("cannot add a generator with closed bonds");
  }
  Site s;
  s.id = next_site_++;
  s.gen = std::move(g);
  if (s.gen.kind == GeneratorKind::Ungrounded) {
    count_open(s.gen, &open_ungrounded_out_, &open_ungrounded_in_);
  }
  sites_.push_back(std::move(s));
  debug_check();
  return sites_.back().id;
}

void Configuration::remove_site(SiteId site) {
  Site* s = find_site(site);
  if (s == nullptr) throw StructureError("no such site: " + std::to_string(site));
  std::vector<BondRef> closed;
  for (const auto& b : s->gen.bonds) {
    if (b.closed) closed.push_back({site, b.coordinate});
  }
  for (const auto& ref : closed) disconnect(ref);
  s = find_site(site);
  if (s->gen.kind == GeneratorKind::Ungrounded) {
    int out_count = 0;
    int in_count = 0;
    count_open(s->gen, &out_count, &in_count);
    open_ungrounded_out_ -= out_count;
    open_ungrounded_in_ -= in_count;
  }
  sites_.erase(sites_.begin() + (s - sites_.data()));
  debug_check();
}

double Configuration::edge_energy(const Generator& from_gen,
                                  const Generator& to_gen, EdgeKind kind) const {
  if (kind == EdgeKind::Support) {
    const auto* grounded = std::get_if<GroundedProvenance>(&to_gen.provenance);
    if (grounded == nullptr) {
      throw StructureError("support bond target lacks a detection confidence");
    }
    return support_bond_energy(grounded->confidence);
  }
  if (kg_ == nullptr) {
    throw StructureError("no knowledge graph attached for semantic bond energy");
  }
  return kg_->semantic_bond_energy(from_gen.concept_id, to_gen.concept_id);
}

void Configuration::connect(const BondRef& out_ref, const BondRef& in_ref) {
  Site* from_site = find_site(out_ref.site);
  Site* to_site = find_site(in_ref.site);
  if (from_site == nullptr) throw StructureError("no such site: " + std::to_string(out_ref.site));
  if (to_site == nullptr) throw StructureError("no such site: " + std::to_string(in_ref.site));
  if (out_ref.site == in_ref.site) {
    throw StructureError("cannot close a bond onto its own generator");
  }
  Bond* out_bond = from_site->gen.find_bond(out_ref.coordinate);
  Bond* in_bond = to_site->gen.find_bond(in_ref.coordinate);
  if (out_bond == nullptr) throw StructureError("no bond at " + ref_string(out_ref));
  if (in_bond == nullptr) throw StructureError("no bond at " + ref_string(in_ref));
  if (out_bond->direction != BondDirection::Out) {
    throw StructureError("first endpoint is not an out-bond: " + ref_string(out_ref));
  }
  if (in_bond->direction != BondDirection::In) {
    throw StructureError("second endpoint is not an in-bond: " + ref_string(in_ref));
  }
  if (out_bond->closed) throw StructureError("bond already closed: " + ref_string(out_ref));
  if (in_bond->closed) throw StructureError("bond already closed: " + ref_string(in_ref));
  if (!values_compatible(out_bond->value, in_bond->value, model_.relatedto_wildcard)) {
    throw StructureError("bond values do not match: '" + out_bond->value + "' vs '" +
                         in_bond->value + "'");
  }

  EdgeKind kind;
  if (out_bond->value == kFeatureBondValue) {
    kind = EdgeKind::Support;
    if (from_site->gen.kind != GeneratorKind::Feature ||
        to_site->gen.kind != GeneratorKind::Grounded) {
      throw StructureError("feature bonds couple a feature generator to a grounded one");
    }
  } else {
    kind = EdgeKind::Semantic;
    if (!is_semantic_kind(from_site->gen.kind) || !is_semantic_kind(to_site->gen.kind)) {
      throw StructureError("semantic bonds couple grounded or ungrounded generators");
    }
  }

  ConfigEdge edge;
  edge.from = out_ref;
  edge.to = in_ref;
  edge.value = out_bond->value;
  edge.kind = kind;
  edge.energy = edge_energy(from_site->gen, to_site->gen, kind);

  out_bond->closed = true;
  out_bond->peer_site = in_ref.site;
  out_bond->peer_coordinate = in_ref.coordinate;
  in_bond->closed = true;
  in_bond->peer_site = out_ref.site;
  in_bond->peer_coordinate = out_ref.coordinate;

  if (from_site->gen.kind == GeneratorKind::Ungrounded) --open_ungrounded_out_;
  if (to_site->gen.kind == GeneratorKind::Ungrounded) --open_ungrounded_in_;
  if (kind == EdgeKind::Support) {
    support_sum_ += edge.energy;
  } else {
    semantic_sum_ += edge.energy;
  }
  edges_.push_back(std::move(edge));
  debug_check();
}

void Configuration::disconnect(const BondRef& endpoint) {
  auto it = std::find_if(edges_.begin(), edges_.end(), [&](const ConfigEdge& e) {
    return e.from == endpoint || e.to == endpoint;
  });
  if (it == edges_.end()) {
    throw StructureError("no edge incident to " + ref_string(endpoint));
  }
  ConfigEdge edge = *it;
  Site* from_site = find_site(edge.from.site);
  Site* to_site = find_site(edge.to.site);
  Bond* out_bond = from_site->gen.find_bond(edge.from.coordinate);
  Bond* in_bond = to_site->gen.find_bond(edge.to.coordinate);
  out_bond->closed = false;
  out_bond->peer_site = kNoSite;
  out_bond->peer_coordinate = -1;
  in_bond->closed = false;
  in_bond->peer_site = kNoSite;
  in_bond->peer_coordinate = -1;
  if (from_site->gen.kind == GeneratorKind::Ungrounded) ++open_ungrounded_out_;
  if (to_site->gen.kind == GeneratorKind::Ungrounded) ++open_ungrounded_in_;
  if (edge.kind == EdgeKind::Support) {
    support_sum_ -= edge.energy;
  } else {
    semantic_sum_ -= edge.energy;
  }
  edges_.erase(it);
  debug_check();
}

std::vector<BondRef> Configuration::open_site_bonds(
    SiteId site, std::optional<BondDirection> dir) const {
  const Site* s = find_site_const(site);
  if (s == nullptr) throw StructureError("no such site: " + std::to_string(site));
  std::vector<BondRef> refs;
  for (const auto& b : s->gen.bonds) {
    if (b.closed) continue;
    if (dir && b.direction != *dir) continue;
    refs.push_back({site, b.coordinate});
  }
  return refs;
}

std::optional<BondRef> Configuration::find_open_bond(SiteId site, BondDirection dir,
                                                     const std::string& value) const {
  const Site* s = find_site_const(site);
  if (s == nullptr) throw StructureError("no such site: " + std::to_string(site));
  for (const auto& b : s->gen.bonds) {
    if (!b.closed && b.direction == dir && b.value == value) {
      return BondRef{site, b.coordinate};
    }
  }
  return std::nullopt;
}

double Configuration::cost_q() const {
  return cost_q(model_.k_cost, model_.q_count_in_bonds);
}

double Configuration::cost_q(double k) const {
  return cost_q(k, model_.q_count_in_bonds);
}

double Configuration::cost_q(double k, bool count_in_bonds) const {
  int open_count = open_ungrounded_out_;
  if (count_in_bonds) open_count += open_ungrounded_in_;
  return k * open_count;
}

EnergyBreakdown Configuration::energy() const {
  return energy(model_.k_cost, model_.q_count_in_bonds);
}

EnergyBreakdown Configuration::energy(double k) const {
  return energy(k, model_.q_count_in_bonds);
}

EnergyBreakdown Configuration::energy(double k, bool count_in_bonds) const {
  EnergyBreakdown out;
  out.support_sum = support_sum_;
  out.semantic_sum = semantic_sum_;
  out.q_cost = cost_q(k, count_in_bonds);
  out.total = -(out.support_sum + out.semantic_sum) + out.q_cost;
  return out;
}

double Configuration::probability_weight() const {
  return std::exp(-energy().total);
}

EnergyBreakdown Configuration::recompute() const {
  EnergyBreakdown out;
  for (const auto& e : edges_) {
    const Site* from_site = find_site_const(e.from.site);
    const Site* to_site = find_site_const(e.to.site);
    double energy = e.energy;
    if (from_site != nullptr && to_site != nullptr &&
        (e.kind == EdgeKind::Support || kg_ != nullptr)) {
      energy = edge_energy(from_site->gen, to_site->gen, e.kind);
    }
    if (e.kind == EdgeKind::Support) {
      out.support_sum += energy;
    } else {
      out.semantic_sum += energy;
    }
  }
  int open_out = 0;
  int open_in = 0;
  for (const auto& s : sites_) {
    if (s.gen.kind != GeneratorKind::Ungrounded) continue;
    count_open(s.gen, &open_out, &open_in);
  }
  int open_count = open_out;
  if (model_.q_count_in_bonds) open_count += open_in;
  out.q_cost = model_.k_cost * open_count;
  out.total = -(out.support_sum + out.semantic_sum) + out.q_cost;
  return out;
}

void Configuration::debug_check() const {
#ifndef NDEBUG
  EnergyBreakdown fresh = recompute();
  EnergyBreakdown cached = energy();
  if (std::abs(fresh.support_sum - cached.support_sum) > kEnergyTolerance ||
      std::abs(fresh.semantic_sum - cached.semantic_sum) > kEnergyTolerance ||
      std::abs(fresh.q_cost - cached.q_cost) > kEnergyTolerance) {
    throw StructureError("incremental energy cache diverged from recomputation");
  }
#endif
}

std::vector<std::string> Configuration::validate() const {
  std::vector<std::string> out;
  auto report = [&out](const std::string& msg) { out.push_back(msg); };

  std::set<SiteId> ids;
  for (const auto& s : sites_) {
    if (!ids.insert(s.id).second) {
      report("duplicate site id " + std::to_string(s.id));
    }
  }

  std::map<std::pair<SiteId, int>, int> endpoint_uses;
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const ConfigEdge& e = edges_[i];
    const std::string tag = "edge " + std::to_string(i);
    const Site* from_site = find_site_const(e.from.site);
    const Site* to_site = find_site_const(e.to.site);
    if (from_site == nullptr || to_site == nullptr) {
      report(tag + ": endpoint site missing");
      continue;
    }
    const Bond* out_bond = from_site->gen.find_bond(e.from.coordinate);
    const Bond* in_bond = to_site->gen.find_bond(e.to.coordinate);
    if (out_bond == nullptr || in_bond == nullptr) {
      report(tag + ": endpoint coordinate missing");
      continue;
    }
    ++endpoint_uses[{e.from.site, e.from.coordinate}];
    ++endpoint_uses[{e.to.site, e.to.coordinate}];
    if (out_bond->direction != BondDirection::Out) {
      report(tag + ": from endpoint is not an out-bond");
    }
    if (in_bond->direction != BondDirection::In) {
      report(tag + ": to endpoint is not an in-bond");
    }
    if (!out_bond->closed || !in_bond->closed) {
      report(tag + ": endpoints not closed");
    }
    if (out_bond->peer_site != e.to.site || out_bond->peer_coordinate != e.to.coordinate ||
        in_bond->peer_site != e.from.site || in_bond->peer_coordinate != e.from.coordinate) {
      report(tag + ": endpoint peers are not mutual");
    }
    if (!values_compatible(out_bond->value, in_bond->value, model_.relatedto_wildcard)) {
      report(tag + ": bond values do not match");
    }
    if (!values_compatible(e.value, out_bond->value, model_.relatedto_wildcard)) {
      report(tag + ": stored value disagrees with bonds");
    }
    if (e.kind == EdgeKind::Support) {
      if (out_bond->value != kFeatureBondValue) {
        report(tag + ": support edge on a non-feature bond");
      }
      if (from_site->gen.kind != GeneratorKind::Feature ||
          to_site->gen.kind != GeneratorKind::Grounded) {
        report(tag + ": support edge endpoints have wrong generator kinds");
      }
    } else {
      if (out_bond->value == kFeatureBondValue) {
        report(tag + ": semantic edge on a feature bond");
      }
      if (!is_semantic_kind(from_site->gen.kind) || !is_semantic_kind(to_site->gen.kind)) {
        report(tag + ": semantic edge endpoints have wrong generator kinds");
      }
    }
    if (e.kind == EdgeKind::Support || kg_ != nullptr) {
      double fresh = edge_energy(from_site->gen, to_site->gen, e.kind);
      if (std::abs(fresh - e.energy) > kEnergyTolerance) {
        report(tag + ": stored energy disagrees with recomputation");
      }
    }
  }
  for (const auto& [key, uses] : endpoint_uses) {
    if (uses > 1) {
      report("bond at site " + std::to_string(key.first) + " coordinate " +
             std::to_string(key.second) + " used by " + std::to_string(uses) + " edges");
    }
  }
  for (const auto& s : sites_) {
    for (const auto& b : s.gen.bonds) {
      if (!b.closed) continue;
      BondRef ref{s.id, b.coordinate};
      auto it = endpoint_uses.find({s.id, b.coordinate});
      if (it == endpoint_uses.end()) {
        report("closed bond without an edge at " + ref_string(ref));
      }
    }
  }

  EnergyBreakdown fresh = recompute();
  EnergyBreakdown cached = energy();
  if (std::abs(fresh.support_sum - cached.support_sum) > kEnergyTolerance) {
    report("cached support sum diverged from recomputation");
  }
  if (std::abs(fresh.semantic_sum - cached.semantic_sum) > kEnergyTolerance) {
    report("cached semantic sum diverged from recomputation");
  }
  if (std::abs(fresh.q_cost - cached.q_cost) > kEnergyTolerance) {
    report("cached open-bond cost diverged from recomputation");
  }
  return out;
}

bool Configuration::grounded_connected() const {
  std::vector<SiteId> grounded;
  for (const auto& s : sites_) {
    if (s.gen.kind == GeneratorKind::Grounded) grounded.push_back(s.id);
  }
  if (grounded.size() <= 1) return true;

  std::map<SiteId, SiteId> parent;
  for (const auto& s : sites_) parent[s.id] = s.id;
  auto find_root = [&parent](SiteId x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& e : edges_) {
    if (e.kind != EdgeKind::Semantic) continue;
    SiteId a = find_root(e.from.site);
    SiteId b = find_root(e.to.site);
    if (a != b) parent[a] = b;
  }
  SiteId root = find_root(grounded.front());
  for (SiteId g : grounded) {
    if (find_root(g) != root) return false;
  }
  return true;
}

std::vector<Configuration::ContentItem> Configuration::semantic_content() const {
  struct GroundedEntry {
    SiteId site;
    int slot_index;
  };
  std::vector<GroundedEntry> grounded;
  for (const auto& s : sites_) {
    if (s.gen.kind != GeneratorKind::Grounded) continue;
    int slot_index = 0;
    if (const auto* p = std::get_if<GroundedProvenance>(&s.gen.provenance)) {
      slot_index = p->slot_index;
    }
    grounded.push_back({s.id, slot_index});
  }
  std::sort(grounded.begin(), grounded.end(),
            [](const GroundedEntry& a, const GroundedEntry& b) {
              return std::tie(a.slot_index, a.site) < std::tie(b.slot_index, b.site);
            });
  std::map<SiteId, int> position;
  for (std::size_t i = 0; i < grounded.size(); ++i) {
    position[grounded[i].site] = static_cast<int>(i);
  }

  struct CueEntry {
    SiteId site;
    std::string concept_id;
    int last_pos = -1;
    double energy_sum = 0.0;
  };
  std::vector<CueEntry> cues;
  for (const auto& s : sites_) {
    if (s.gen.kind != GeneratorKind::Ungrounded) continue;
    cues.push_back({s.id, s.gen.concept_id, -1, 0.0});
  }
  for (auto& cue : cues) {
    for (const auto& e : edges_) {
      if (e.kind != EdgeKind::Semantic) continue;
      SiteId other = kNoSite;
      if (e.from.site == cue.site) {
        other = e.to.site;
      } else if (e.to.site == cue.site) {
        other = e.from.site;
      } else {
        continue;
      }
      cue.energy_sum += e.energy;
      auto it = position.find(other);
      if (it != position.end()) cue.last_pos = std::max(cue.last_pos, it->second);
    }
  }
  std::sort(cues.begin(), cues.end(), [](const CueEntry& a, const CueEntry& b) {
    // Unattached cues sort after everything else.
    int ga = a.last_pos < 0 ? 1 : 0;
    int gb = b.last_pos < 0 ? 1 : 0;
    return std::tie(ga, a.last_pos, b.energy_sum, a.concept_id, a.site) <
           std::tie(gb, b.last_pos, a.energy_sum, b.concept_id, b.site);
  });

  std::vector<ContentItem> out;
  std::size_t cue_index = 0;
  for (std::size_t i = 0; i < grounded.size(); ++i) {
    const Site* s = find_site_const(grounded[i].site);
    out.push_back({s->gen.concept_id, GeneratorKind::Grounded});
    while (cue_index < cues.size() && cues[cue_index].last_pos == static_cast<int>(i)) {
      out.push_back({cues[cue_index].concept_id, GeneratorKind::Ungrounded});
      ++cue_index;
    }
  }
  for (; cue_index < cues.size(); ++cue_index) {
    out.push_back({cues[cue_index].concept_id, GeneratorKind::Ungrounded});
  }
  return out;
}

Configuration Configuration::restore(std::vector<Site> sites,
                                     std::vector<ConfigEdge> edges, EnergyModel model,
                                     std::shared_ptr<const KnowledgeGraph> kg) {
  Configuration c(std::move(kg), model);
  c.sites_ = std::move(sites);
  c.edges_ = std::move(edges);
  for (const auto& s : c.sites_) {
    c.next_site_ = std::max(c.next_site_, s.id + 1);
    if (s.gen.kind == GeneratorKind::Ungrounded) {
      c.count_open(s.gen, &c.open_ungrounded_out_, &c.open_ungrounded_in_);
    }
  }
  for (const auto& e : c.edges_) {
    if (e.kind == EdgeKind::Support) {
      c.support_sum_ += e.energy;
    } else {
      c.semantic_sum_ += e.energy;
    }
  }
  std::vector<std::string> violations = c.validate();
  if (!violations.empty()) {
    throw StructureError("restored configuration is inconsistent: " + violations.front());
  }
  return c;
}

}  // namespace ptsem
