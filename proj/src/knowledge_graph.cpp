#include "ptsem/knowledge_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "ptsem/concept.hpp"
#include "ptsem/errors.hpp"

namespace ptsem {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_weight(const std::string& field, std::size_t line_no) {
  const std::string text = trim(field);
  if (text.empty()) throw ParseError(line_no, "empty weight field");
  char* endp = nullptr;
  double value = std::strtod(text.c_str(), &endp);
  if (endp != text.c_str() + text.size())
    throw ParseError(line_no, "non-numeric weight '" + text + "'");
  if (!std::isfinite(value))
    throw ParseError(line_no, "non-finite weight '" + text + "'");
  return value;
}

}  // namespace

KnowledgeGraph KnowledgeGraph::load(std::istream& in, const KgLoadOptions& options,
                                    KgLoadReport* report) {
  KnowledgeGraph kg;
  const std::set<std::string> symmetric(options.symmetrize.begin(),
                                        options.symmetrize.end());

  // (relation, start, end) -> edge id, for duplicate merging.
  std::map<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>, std::uint32_t>
      seen;
  std::size_t merged = 0;

  auto add = [&](std::uint32_t rel, std::uint32_t start, std::uint32_t end,
                 double weight) {
    auto key = std::make_tuple(rel, start, end);
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(key, static_cast<std::uint32_t>(kg.edges_.size()));
      kg.edges_.push_back(Edge{rel, start, end, weight});
      return;
    }
    ++merged;
    Edge& existing = kg.edges_[it->second];
    if (std::fabs(weight) > std::fabs(existing.weight)) existing.weight = weight;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;

    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      std::size_t tab = line.find('\t', pos);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(pos));
        break;
      }
      fields.push_back(line.substr(pos, tab - pos));
      pos = tab + 1;
    }
    if (fields.size() != 4)
      throw ParseError(line_no, "expected 4 tab-separated fields, got " +
                                    std::to_string(fields.size()));

    const std::string relation = trim(fields[0]);
    const std::string start = normalize_concept(fields[1]);
    const std::string end = normalize_concept(fields[2]);
    if (relation.empty()) throw ParseError(line_no, "empty relation field");
    if (start.empty()) throw ParseError(line_no, "empty start concept");
    if (end.empty()) throw ParseError(line_no, "empty end concept");
    const double weight = parse_weight(fields[3], line_no);

    const std::uint32_t rel = kg.intern_relation(relation);
    const std::uint32_t s = kg.intern_concept(start);
    const std::uint32_t e = kg.intern_concept(end);
    add(rel, s, e, weight);
    if (symmetric.count(relation) && s != e) add(rel, e, s, weight);
  }

  if (kg.edges_.empty()) throw Error("no assertions in knowledge graph input");

  kg.build_indexes();
  if (report) {
    report->assertions = kg.edges_.size();
    report->merged_duplicates = merged;
  }
  return kg;
}

KnowledgeGraph KnowledgeGraph::load_file(const std::string& path,
                                         const KgLoadOptions& options,
                                         KgLoadReport* report) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open knowledge graph file: " + path);
  return load(in, options, report);
}

std::uint32_t KnowledgeGraph::intern_concept(const std::string& id) {
  auto it = concept_index_.find(id);
  if (it != concept_index_.end()) return it->second;
  const auto idx = static_cast<std::uint32_t>(concepts_.size());
  concepts_.push_back(id);
  concept_index_.emplace(id, idx);
  return idx;
}

std::uint32_t KnowledgeGraph::intern_relation(const std::string& name) {
  auto it = relation_index_.find(name);
  if (it != relation_index_.end()) return it->second;
  const auto idx = static_cast<std::uint32_t>(relations_.size());
  relations_.push_back(name);
  relation_index_.emplace(name, idx);
  return idx;
}

int KnowledgeGraph::concept_index(const std::string& id) const {
  auto it = concept_index_.find(id);
  return it == concept_index_.end() ? -1 : static_cast<int>(it->second);
}

void KnowledgeGraph::build_indexes() {
  out_.assign(concepts_.size(), {});
  in_.assign(concepts_.size(), {});
  for (std::uint32_t i = 0; i < edges_.size(); ++i) {
    out_[edges_[i].start].push_back(i);
    in_[edges_[i].end].push_back(i);
  }
  auto by_relation_other = [this](bool use_end) {
    return [this, use_end](std::uint32_t a, std::uint32_t b) {
      const Edge& ea = edges_[a];
      const Edge& eb = edges_[b];
      const std::string& ra = relations_[ea.relation];
      const std::string& rb = relations_[eb.relation];
      if (ra != rb) return ra < rb;
      const std::string& oa = concepts_[use_end ? ea.end : ea.start];
      const std::string& ob = concepts_[use_end ? eb.end : eb.start];
      return oa < ob;
    };
  };
  for (auto& ids : out_) std::sort(ids.begin(), ids.end(), by_relation_other(true));
  for (auto& ids : in_) std::sort(ids.begin(), ids.end(), by_relation_other(false));

  strongest_.clear();
  for (std::uint32_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    const std::uint64_t key = pair_key(e.start, e.end);
    auto it = strongest_.find(key);
    if (it == strongest_.end()) {
      strongest_.emplace(key, i);
      continue;
    }
    const Edge& best = edges_[it->second];
    const double da = std::fabs(e.weight);
    const double db = std::fabs(best.weight);
    if (da > db ||
        (da == db && relations_[e.relation] < relations_[best.relation])) {
      it->second = i;
    }
  }
}

bool KnowledgeGraph::has_concept(const std::string& concept_id) const {
  return concept_index_.count(concept_id) > 0;
}

bool KnowledgeGraph::has_direct(const std::string& from, const std::string& to) const {
  const int a = concept_index(from);
  const int b = concept_index(to);
  if (a < 0 || b < 0) return false;
  return strongest_.count(pair_key(static_cast<std::uint32_t>(a),
                                   static_cast<std::uint32_t>(b))) > 0;
}

double KnowledgeGraph::assertion_strength(const std::string& from,
                                          const std::string& to) const {
  const int a = concept_index(from);
  const int b = concept_index(to);
  if (a < 0 || b < 0) return 0.0;
  auto it = strongest_.find(pair_key(static_cast<std::uint32_t>(a),
                                     static_cast<std::uint32_t>(b)));
  return it == strongest_.end() ? 0.0 : edges_[it->second].weight;
}

double KnowledgeGraph::semantic_bond_energy(const std::string& from,
                                            const std::string& to) const {
  return std::tanh(assertion_strength(from, to));
}

std::vector<Cue> KnowledgeGraph::find_cues(const std::string& from,
                                           const std::string& to,
                                           const CueOptions& options) const {
  if (has_direct(from, to)) return {};
  if (options.strict_both_directions && has_direct(to, from)) return {};
  const int a = concept_index(from);
  const int b = concept_index(to);
  if (a < 0 || b < 0) return {};

  std::vector<Cue> cues;
  std::set<std::uint32_t> mids;
  for (std::uint32_t edge_id : out_[static_cast<std::uint32_t>(a)]) {
    const std::uint32_t mid = edges_[edge_id].end;
    if (mid == static_cast<std::uint32_t>(a) || mid == static_cast<std::uint32_t>(b))
      continue;
    if (!mids.insert(mid).second) continue;
    if (!strongest_.count(pair_key(mid, static_cast<std::uint32_t>(b)))) continue;
    const std::string& k = concepts_[mid];
    const double score =
        std::tanh(assertion_strength(from, k)) + std::tanh(assertion_strength(k, to));
    cues.push_back(Cue{k, score});
  }
  std::sort(cues.begin(), cues.end(), [](const Cue& x, const Cue& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.concept_id < y.concept_id;
  });
  if (cues.size() > options.limit) cues.resize(options.limit);
  return cues;
}

std::vector<NeighborEdge> KnowledgeGraph::neighbors(const std::string& concept_id,
                                                    Direction direction) const {
  const int idx = concept_index(concept_id);
  if (idx < 0) return {};
  const auto& ids = direction == Direction::Out ? out_[idx] : in_[idx];
  std::vector<NeighborEdge> result;
  result.reserve(ids.size());
  for (std::uint32_t edge_id : ids) {
    const Edge& e = edges_[edge_id];
    const std::uint32_t other = direction == Direction::Out ? e.end : e.start;
    result.push_back(NeighborEdge{relations_[e.relation], concepts_[other], e.weight});
  }
  return result;
}

std::vector<NeighborEdge> KnowledgeGraph::assertions_between(
    const std::string& from, const std::string& to) const {
  const int a = concept_index(from);
  const int b = concept_index(to);
  if (a < 0 || b < 0) return {};
  std::vector<NeighborEdge> result;
  for (std::uint32_t edge_id : out_[static_cast<std::uint32_t>(a)]) {
    const Edge& e = edges_[edge_id];
    if (e.end != static_cast<std::uint32_t>(b)) continue;
    result.push_back(NeighborEdge{relations_[e.relation], to, e.weight});
  }
  std::sort(result.begin(), result.end(),
            [](const NeighborEdge& x, const NeighborEdge& y) {
              const double dx = std::fabs(x.weight);
              const double dy = std::fabs(y.weight);
              if (dx != dy) return dx > dy;
              return x.relation < y.relation;
            });
  return result;
}

std::vector<Assertion> KnowledgeGraph::assertions() const {
  std::vector<Assertion> result;
  result.reserve(edges_.size());
  for (const Edge& e : edges_) {
    result.push_back(
        Assertion{relations_[e.relation], concepts_[e.start], concepts_[e.end], e.weight});
  }
  return result;
}

}  // namespace ptsem
