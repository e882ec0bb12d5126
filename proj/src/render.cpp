#include "ptsem/render.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "ptsem/errors.hpp"

namespace ptsem {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kUnknownNgramCount = 0.5;

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string spaces_for_underscores(std::string s) {
  std::replace(s.begin(), s.end(), '_', ' ');
  return s;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string word;
  while (in >> word) words.push_back(word);
  return words;
}

bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

// Lowest-slot grounded concept carrying the role, if any.
const std::string* role_concept(const Configuration& c, SlotRole role) {
  const std::string* found = nullptr;
  int best_index = 0;
  for (const Site& s : c.sites()) {
    if (s.gen.kind != GeneratorKind::Grounded) continue;
    const auto* prov = std::get_if<GroundedProvenance>(&s.gen.provenance);
    if (prov == nullptr || prov->role != role) continue;
    if (found == nullptr || prov->slot_index < best_index) {
      found = &s.gen.concept_id;
      best_index = prov->slot_index;
    }
  }
  return found;
}

std::string escape_dot(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::string format_energy(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.3f", value);
  return buffer;
}

}  // namespace

NgramFrequencyScorer NgramFrequencyScorer::load(std::istream& in) {
  NgramFrequencyScorer scorer;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
      throw ParseError(line_number, "expected `ngram<TAB>count`");
    }
    std::string key = lowercase(line.substr(0, tab));
    std::string count_text = line.substr(tab + 1);
    std::size_t used = 0;
    double count = 0.0;
    try {
      count = std::stod(count_text, &used);
    } catch (const std::exception&) {
      throw ParseError(line_number, "count is not a number");
    }
    if (used != count_text.size() || !std::isfinite(count) || count <= 0.0) {
      throw ParseError(line_number, "count must be a positive number");
    }
    scorer.counts_[std::move(key)] = count;
  }
  return scorer;
}

NgramFrequencyScorer NgramFrequencyScorer::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open counts file: " + path);
  return load(in);
}

double NgramFrequencyScorer::score(const std::string& sentence) const {
  auto count_of = [this](const std::string& key) {
    auto it = counts_.find(key);
    return it == counts_.end() ? kUnknownNgramCount : it->second;
  };
  std::vector<std::string> words = split_words(lowercase(sentence));
  double total = 0.0;
  for (const std::string& word : words) total += std::log(count_of(word));
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    total += std::log(count_of(words[i] + " " + words[i + 1]));
  }
  return total;
}

std::unique_ptr<SentenceScorer> make_scorer(const std::string& counts_path) {
  if (!counts_path.empty()) {
    std::ifstream in(counts_path);
    if (in) {
      return std::make_unique<NgramFrequencyScorer>(NgramFrequencyScorer::load(in));
    }
  }
  return std::make_unique<UniformScorer>();
}

VerbMorphology::VerbMorphology() {
  // Irregulars plus stress-final-syllable exceptions the doubling rule
  // would otherwise mangle.
  add_override("be", "is", "being");
  add_override("do", "does", "doing");
  add_override("go", "goes", "going");
  add_override("have", "has", "having");
  add_override("butter", "butters", "buttering");
  add_override("cover", "covers", "covering");
  add_override("enter", "enters", "entering");
  add_override("gather", "gathers", "gathering");
  add_override("happen", "happens", "happening");
  add_override("listen", "listens", "listening");
  add_override("offer", "offers", "offering");
  add_override("open", "opens", "opening");
  add_override("order", "orders", "ordering");
  add_override("visit", "visits", "visiting");
  add_override("wander", "wanders", "wandering");
  add_override("water", "waters", "watering");
}

void VerbMorphology::add_override(const std::string& base, const std::string& third,
                                  const std::string& participle) {
  overrides_[lowercase(base)] = Forms{lowercase(third), lowercase(participle)};
}

void VerbMorphology::load_overrides(std::istream& in) {
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string base;
    std::string third;
    std::string participle;
    if (!std::getline(fields, base, '\t') || !std::getline(fields, third, '\t') ||
        !std::getline(fields, participle) || base.empty() || third.empty() ||
        participle.empty()) {
      throw ParseError(line_number, "expected `base<TAB>third<TAB>participle`");
    }
    add_override(base, third, participle);
  }
}

void VerbMorphology::load_overrides_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open verb overrides file: " + path);
  load_overrides(in);
}

std::string VerbMorphology::third_person(const std::string& verb) const {
  std::vector<std::string> words = split_words(lowercase(verb));
  if (words.empty()) return verb;
  std::string& w = words.front();
  auto it = overrides_.find(w);
  if (it != overrides_.end()) {
    w = it->second.third;
  } else if (w.size() >= 2 &&
             (w.ends_with("ch") || w.ends_with("sh") || w.back() == 's' ||
              w.back() == 'x' || w.back() == 'z' || w.back() == 'o')) {
    w += "es";
  } else if (w.size() >= 2 && w.back() == 'y' && !is_vowel(w[w.size() - 2])) {
    w.replace(w.size() - 1, 1, "ies");
  } else {
    w += "s";
  }
  std::string out = words.front();
  for (std::size_t i = 1; i < words.size(); ++i) out += " " + words[i];
  return out;
}

std::string VerbMorphology::participle(const std::string& verb) const {
  std::vector<std::string> words = split_words(lowercase(verb));
  if (words.empty()) return verb;
  std::string& w = words.front();
  auto it = overrides_.find(w);
  if (it != overrides_.end()) {
    w = it->second.participle;
  } else if (w.size() >= 2 && w.ends_with("ie")) {
    w.replace(w.size() - 2, 2, "ying");
  } else if (w.size() >= 2 && w.back() == 'e' && !w.ends_with("ee")) {
    w.replace(w.size() - 1, 1, "ing");
  } else {
    char last = w.back();
    bool cvc = w.size() >= 2 && !is_vowel(last) && last != 'w' && last != 'x' &&
               last != 'y' && is_vowel(w[w.size() - 2]) &&
               (w.size() == 2 || !is_vowel(w[w.size() - 3]));
    if (cvc) w.push_back(last);
    w += "ing";
  }
  std::string out = words.front();
  for (std::size_t i = 1; i < words.size(); ++i) out += " " + words[i];
  return out;
}

CaptionResult to_caption(const Configuration& c, const SentenceScorer& scorer,
                         const VerbMorphology& morphology) {
  const std::string* action = role_concept(c, SlotRole::Action);
  if (action == nullptr) throw MissingRoleError("action");
  const std::string* subject = role_concept(c, SlotRole::Subject);
  if (subject == nullptr) throw MissingRoleError("subject");
  const std::string* object = role_concept(c, SlotRole::Object);
  if (object == nullptr) throw MissingRoleError("object");

  std::string subject_text = spaces_for_underscores(lowercase(*subject));
  std::string object_text = spaces_for_underscores(lowercase(*object));
  std::string verb = spaces_for_underscores(lowercase(*action));
  const std::string verb_forms[2] = {morphology.third_person(verb),
                                     "is " + morphology.participle(verb)};
  static const char* kPrepositions[] = {"", "on", "in", "with", "into", "to"};

  CaptionResult result;
  for (const char* det1 : {"A", "The"}) {
    for (const std::string& form : verb_forms) {
      for (const char* prep : kPrepositions) {
        for (const char* det2 : {"a", "the"}) {
          std::string sentence = std::string(det1) + " " + subject_text + " " + form;
          if (*prep != '\0') sentence += std::string(" ") + prep;
          sentence += std::string(" ") + det2 + " " + object_text;
          result.candidates.push_back({std::move(sentence), 0.0});
        }
      }
    }
  }
  std::sort(result.candidates.begin(), result.candidates.end(),
            [](const CaptionCandidate& a, const CaptionCandidate& b) {
              return a.sentence < b.sentence;
            });
  for (CaptionCandidate& candidate : result.candidates) {
    candidate.score = scorer.score(candidate.sentence);
  }
  // Candidates are in sentence order, so the first strict maximum is also
  // the lexicographically smallest among score ties.
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.candidates.size(); ++i) {
    if (result.candidates[i].score > result.candidates[best].score) best = i;
  }
  result.sentence = result.candidates[best].sentence;
  result.score = result.candidates[best].score;
  return result;
}

std::string to_label(const Configuration& c) {
  const std::string* action = role_concept(c, SlotRole::Action);
  if (action == nullptr) throw MissingRoleError("action");
  const std::string* object = role_concept(c, SlotRole::Object);
  if (object == nullptr) throw MissingRoleError("object");
  return spaces_for_underscores(lowercase(*action)) + " " +
         spaces_for_underscores(lowercase(*object));
}

std::string content_string(const Configuration& c) {
  std::string out;
  for (const Configuration::ContentItem& item : c.semantic_content()) {
    if (!out.empty()) out += " ";
    if (item.kind == GeneratorKind::Ungrounded) {
      out += "(" + item.concept_id + ")";
    } else {
      out += item.concept_id;
    }
  }
  return out;
}

namespace {

ordered_json provenance_to_json(const Provenance& provenance) {
  ordered_json out;
  if (const auto* f = std::get_if<FeatureProvenance>(&provenance)) {
    out["type"] = "feature";
    out["tag"] = f->tag;
  } else if (const auto* g = std::get_if<GroundedProvenance>(&provenance)) {
    out["type"] = "grounded";
    out["slot"] = g->slot;
    out["slot_index"] = g->slot_index;
    out["role"] = to_string(g->role);
    out["confidence"] = g->confidence;
  } else if (const auto* u = std::get_if<CueProvenance>(&provenance)) {
    out["type"] = "cue";
    out["from_slot"] = u->from_slot;
    out["to_slot"] = u->to_slot;
    out["from_concept"] = u->from_concept;
    out["to_concept"] = u->to_concept;
  }
  return out;
}

const ordered_json& field(const ordered_json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(std::string("configuration JSON missing field '") + key + "'");
  }
  return *it;
}

std::string string_field(const ordered_json& obj, const char* key) {
  const ordered_json& v = field(obj, key);
  if (!v.is_string()) {
    throw Error(std::string("configuration JSON field '") + key + "' must be a string");
  }
  return v.get<std::string>();
}

double number_field(const ordered_json& obj, const char* key) {
  const ordered_json& v = field(obj, key);
  if (!v.is_number()) {
    throw Error(std::string("configuration JSON field '") + key + "' must be a number");
  }
  return v.get<double>();
}

int int_field(const ordered_json& obj, const char* key) {
  const ordered_json& v = field(obj, key);
  if (!v.is_number_integer()) {
    throw Error(std::string("configuration JSON field '") + key + "' must be an integer");
  }
  return v.get<int>();
}

bool bool_field(const ordered_json& obj, const char* key) {
  const ordered_json& v = field(obj, key);
  if (!v.is_boolean()) {
    throw Error(std::string("configuration JSON field '") + key + "' must be a boolean");
  }
  return v.get<bool>();
}

Provenance provenance_from_json(const ordered_json& obj) {
  std::string type = string_field(obj, "type");
  if (type == "feature") {
    return FeatureProvenance{string_field(obj, "tag")};
  }
  if (type == "grounded") {
    std::string role_name = string_field(obj, "role");
    auto role = parse_slot_role(role_name);
    if (!role) throw Error("unknown slot role '" + role_name + "'");
    return GroundedProvenance{string_field(obj, "slot"), int_field(obj, "slot_index"),
                              *role, number_field(obj, "confidence")};
  }
  if (type == "cue") {
    return CueProvenance{string_field(obj, "from_slot"), string_field(obj, "to_slot"),
                         string_field(obj, "from_concept"),
                         string_field(obj, "to_concept")};
  }
  throw Error("unknown provenance type '" + type + "'");
}

BondRef bond_ref_from_json(const ordered_json& obj) {
  return BondRef{static_cast<SiteId>(int_field(obj, "site")),
                 int_field(obj, "coordinate")};
}

// Serial ids assigned in a structure-only order (grounded sites by
// hypothesis position, feature sites by tag, cue sites by bridged pair and
// concept) so serialization is independent of construction history.
std::map<SiteId, SiteId> canonical_site_ids(const Configuration& c) {
  struct Key {
    int rank = 3;
    int position = 0;
    std::string a, b, d;
    SiteId id = 0;
    bool operator<(const Key& other) const {
      return std::tie(rank, position, a, b, d, id) <
             std::tie(other.rank, other.position, other.a, other.b, other.d,
                      other.id);
    }
  };
  std::vector<Key> keys;
  keys.reserve(c.sites().size());
  for (const Site& s : c.sites()) {
    Key k;
    k.id = s.id;
    if (const auto* g = std::get_if<GroundedProvenance>(&s.gen.provenance)) {
      k.rank = 0;
      k.position = g->slot_index;
      k.a = g->slot;
      k.b = s.gen.concept_id;
    } else if (const auto* f = std::get_if<FeatureProvenance>(&s.gen.provenance)) {
      k.rank = 1;
      k.a = f->tag;
      k.b = s.gen.concept_id;
    } else if (const auto* u = std::get_if<CueProvenance>(&s.gen.provenance)) {
      k.rank = 2;
      k.a = u->from_slot;
      k.b = u->to_slot;
      k.d = s.gen.concept_id;
    } else {
      k.b = s.gen.concept_id;
    }
    keys.push_back(std::move(k));
  }
  std::sort(keys.begin(), keys.end());
  std::map<SiteId, SiteId> ids;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    ids[keys[i].id] = static_cast<SiteId>(i);
  }
  return ids;
}

}  // namespace

std::string to_json(const Configuration& c) {
  std::map<SiteId, SiteId> ids = canonical_site_ids(c);
  std::vector<const Site*> ordered(ids.size());
  for (const Site& s : c.sites()) ordered[ids.at(s.id)] = &s;

  ordered_json doc;
  doc["sites"] = ordered_json::array();
  for (const Site* s : ordered) {
    ordered_json site;
    site["id"] = ids.at(s->id);
    site["kind"] = to_string(s->gen.kind);
    site["concept"] = s->gen.concept_id;
    site["bonds"] = ordered_json::array();
    for (const Bond& b : s->gen.bonds) {
      ordered_json bond;
      bond["coordinate"] = b.coordinate;
      bond["direction"] = to_string(b.direction);
      bond["value"] = b.value;
      bond["closed"] = b.closed;
      if (b.closed) {
        bond["peer_site"] = ids.at(b.peer_site);
        bond["peer_coordinate"] = b.peer_coordinate;
      }
      site["bonds"].push_back(std::move(bond));
    }
    site["provenance"] = provenance_to_json(s->gen.provenance);
    doc["sites"].push_back(std::move(site));
  }

  std::vector<ConfigEdge> edges = c.edges();
  for (ConfigEdge& e : edges) {
    e.from.site = ids.at(e.from.site);
    e.to.site = ids.at(e.to.site);
  }
  std::sort(edges.begin(), edges.end(), [](const ConfigEdge& a, const ConfigEdge& b) {
    return std::tie(a.from.site, a.from.coordinate) <
           std::tie(b.from.site, b.from.coordinate);
  });
  doc["edges"] = ordered_json::array();
  for (const ConfigEdge& e : edges) {
    ordered_json edge;
    edge["from"] = {{"site", e.from.site}, {"coordinate", e.from.coordinate}};
    edge["to"] = {{"site", e.to.site}, {"coordinate", e.to.coordinate}};
    edge["value"] = e.value;
    edge["kind"] = e.kind == EdgeKind::Support ? "support" : "semantic";
    edge["energy"] = e.energy;
    doc["edges"].push_back(std::move(edge));
  }
  // Sums run in canonical edge order so structurally equal configurations
  // serialize to identical bytes regardless of construction history.
  EnergyBreakdown energy = c.energy();
  energy.support_sum = 0.0;
  energy.semantic_sum = 0.0;
  for (const ConfigEdge& e : edges) {
    if (e.kind == EdgeKind::Support) {
      energy.support_sum += e.energy;
    } else {
      energy.semantic_sum += e.energy;
    }
  }
  energy.total = -(energy.support_sum + energy.semantic_sum) + energy.q_cost;
  doc["energy"] = {{"support", energy.support_sum},
                   {"semantic", energy.semantic_sum},
                   {"open_cost", energy.q_cost},
                   {"total", energy.total}};
  const EnergyModel& model = c.model();
  doc["model"] = {{"k_cost", model.k_cost},
                  {"q_count_in_bonds", model.q_count_in_bonds},
                  {"relatedto_wildcard", model.relatedto_wildcard}};
  return doc.dump();
}

Configuration configuration_from_json(const std::string& text,
                                      std::shared_ptr<const KnowledgeGraph> kg) {
  ordered_json doc = ordered_json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error("invalid configuration JSON");
  }
  const ordered_json& raw_sites = field(doc, "sites");
  const ordered_json& raw_edges = field(doc, "edges");
  const ordered_json& raw_model = field(doc, "model");
  if (!raw_sites.is_array() || !raw_edges.is_array() || !raw_model.is_object()) {
    throw Error("invalid configuration JSON");
  }

  std::vector<Site> sites;
  for (const ordered_json& raw : raw_sites) {
    Site s;
    s.id = static_cast<SiteId>(int_field(raw, "id"));
    std::string kind = string_field(raw, "kind");
    if (kind == "feature") {
      s.gen.kind = GeneratorKind::Feature;
    } else if (kind == "grounded") {
      s.gen.kind = GeneratorKind::Grounded;
    } else if (kind == "ungrounded") {
      s.gen.kind = GeneratorKind::Ungrounded;
    } else {
      throw Error("unknown generator kind '" + kind + "'");
    }
    s.gen.concept_id = string_field(raw, "concept");
    const ordered_json& raw_bonds = field(raw, "bonds");
    if (!raw_bonds.is_array()) throw Error("site bonds must be an array");
    for (const ordered_json& raw_bond : raw_bonds) {
      Bond b;
      b.coordinate = int_field(raw_bond, "coordinate");
      std::string direction = string_field(raw_bond, "direction");
      if (direction == "in") {
        b.direction = BondDirection::In;
      } else if (direction == "out") {
        b.direction = BondDirection::Out;
      } else {
        throw Error("unknown bond direction '" + direction + "'");
      }
      b.value = string_field(raw_bond, "value");
      b.closed = bool_field(raw_bond, "closed");
      if (b.closed) {
        b.peer_site = static_cast<SiteId>(int_field(raw_bond, "peer_site"));
        b.peer_coordinate = int_field(raw_bond, "peer_coordinate");
      }
      s.gen.bonds.push_back(std::move(b));
    }
    s.gen.provenance = provenance_from_json(field(raw, "provenance"));
    sites.push_back(std::move(s));
  }

  std::vector<ConfigEdge> edges;
  for (const ordered_json& raw : raw_edges) {
    ConfigEdge e;
    e.from = bond_ref_from_json(field(raw, "from"));
    e.to = bond_ref_from_json(field(raw, "to"));
    e.value = string_field(raw, "value");
    std::string kind = string_field(raw, "kind");
    if (kind == "support") {
      e.kind = EdgeKind::Support;
    } else if (kind == "semantic") {
      e.kind = EdgeKind::Semantic;
    } else {
      throw Error("unknown edge kind '" + kind + "'");
    }
    e.energy = number_field(raw, "energy");
    edges.push_back(std::move(e));
  }

  EnergyModel model;
  model.k_cost = number_field(raw_model, "k_cost");
  model.q_count_in_bonds = bool_field(raw_model, "q_count_in_bonds");
  model.relatedto_wildcard = bool_field(raw_model, "relatedto_wildcard");
  return Configuration::restore(std::move(sites), std::move(edges), model,
                                std::move(kg));
}

std::string to_dot(const Configuration& c) {
  std::map<SiteId, SiteId> ids = canonical_site_ids(c);
  std::vector<const Site*> ordered(ids.size());
  for (const Site& s : c.sites()) ordered[ids.at(s.id)] = &s;

  std::ostringstream out;
  out << "digraph interpretation {\n";
  out << "  rankdir=LR;\n";
  for (const Site* s : ordered) {
    out << "  n" << ids.at(s->id) << " [label=\"" << escape_dot(s->gen.concept_id)
        << "\"";
    switch (s->gen.kind) {
      case GeneratorKind::Grounded:
        out << ", shape=box, style=bold";
        break;
      case GeneratorKind::Ungrounded:
        out << ", shape=box, color=red, fontcolor=red";
        break;
      case GeneratorKind::Feature:
        out << ", shape=ellipse, style=dashed, color=gray50, fontcolor=gray50";
        break;
    }
    out << "];\n";
  }
  std::vector<ConfigEdge> edges = c.edges();
  for (ConfigEdge& e : edges) {
    e.from.site = ids.at(e.from.site);
    e.to.site = ids.at(e.to.site);
  }
  std::sort(edges.begin(), edges.end(), [](const ConfigEdge& a, const ConfigEdge& b) {
    return std::tie(a.from.site, a.from.coordinate) <
           std::tie(b.from.site, b.from.coordinate);
  });
  for (const ConfigEdge& e : edges) {
    out << "  n" << e.from.site << " -> n" << e.to.site << " [label=\""
        << escape_dot(e.value) << " " << format_energy(e.energy) << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace ptsem
