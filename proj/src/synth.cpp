#include "ptsem/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ptsem/errors.hpp"
#include "ptsem/hypothesis.hpp"
#include "ptsem/knowledge_graph.hpp"
#include "ptsem/oracle.hpp"
#include "ptsem/rng.hpp"

namespace ptsem {
namespace {

using ordered_json = nlohmann::ordered_json;

const char* kVerbBank[] = {"stir",  "add",   "pour",  "cut",   "crack",
                           "peel",  "spread", "wipe",  "fill",  "mix",
                           "tidy",  "slice", "chop",  "boil",  "fry",
                           "wash",  "grab",  "place", "lift",  "shake"};
const char* kNounBank[] = {"teabag", "egg",    "pan",   "oil",    "milk",
                           "bowl",   "cabinet", "plate", "knife",  "onion",
                           "bread",  "butter", "cup",   "kettle", "spoon",
                           "board",  "towel",  "jar",   "lid",    "sink"};
constexpr int kBankSize = 20;
constexpr int kMaxAttempts = 100;
constexpr std::uint64_t kValidationBudget = 2'000'000;

struct SynthAssertion {
  std::string relation;
  std::string start;
  std::string end;
  double weight;
};

struct Instance {
  HypothesisSet hypothesis;
  std::vector<SynthAssertion> assertions;
  PlantedAnswer answer;
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// First `n` elements of a shuffled index range [0, size).
std::vector<int> sample_indexes(std::mt19937_64& rng, int size, int n) {
  std::vector<int> indexes(size);
  for (int i = 0; i < size; ++i) indexes[i] = i;
  for (int t = 0; t < n; ++t) {
    std::uniform_int_distribution<int> pick(t, size - 1);
    std::swap(indexes[t], indexes[pick(rng)]);
  }
  indexes.resize(n);
  return indexes;
}

std::string segment_name(int index) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "seg%03d", index);
  return buffer;
}

Instance draw_instance(const SynthParams& p, int index, std::mt19937_64& rng) {
  Instance inst;
  inst.hypothesis.segment = segment_name(index);
  inst.answer.segment = inst.hypothesis.segment;
  const std::string suffix = std::to_string(index);

  std::vector<std::string> planted(p.slots);
  std::vector<std::string> top(p.slots);
  std::vector<int> noun_draw =
      sample_indexes(rng, kBankSize, (p.slots - 1) * p.candidates);
  for (int s = 0; s < p.slots; ++s) {
    Slot slot;
    if (s == 0) {
      slot.id = "action";
      slot.role = SlotRole::Action;
      for (int v : sample_indexes(rng, kBankSize, p.candidates)) {
        slot.candidates.push_back({kVerbBank[v] + suffix, 0.0});
      }
    } else {
      slot.id = s == 1 ? "object" : "other" + std::to_string(s);
      slot.role = s == 1 ? SlotRole::Object : SlotRole::Other;
      for (int n = 0; n < p.candidates; ++n) {
        int pick = noun_draw[(s - 1) * p.candidates + n];
        slot.candidates.push_back({kNounBank[pick] + suffix, 0.0});
      }
    }
    // Rank 0 goes to the distractor; the planted concept lands below it
    // on confidence alone.
    slot.candidates[0].confidence = uniform(rng, 1.5, 2.0);
    std::uniform_int_distribution<int> pick_planted(1, p.candidates - 1);
    int planted_pos = pick_planted(rng);
    for (int n = 1; n < p.candidates; ++n) {
      slot.candidates[n].confidence =
          n == planted_pos ? uniform(rng, 0.8, 1.2) : uniform(rng, 0.1, 0.7);
    }
    planted[s] = slot.candidates[planted_pos].concept_id;
    top[s] = slot.candidates[0].concept_id;
    inst.answer.planted[slot.id] = planted[s];
    inst.hypothesis.slots.push_back(std::move(slot));
  }
  inst.answer.label = inst.answer.planted.at("action") + " " +
                      inst.answer.planted.at("object");

  for (int i = 0; i < p.slots; ++i) {
    for (int j = i + 1; j < p.slots; ++j) {
      const std::string pair_tag = suffix + "p" + std::to_string(i) + std::to_string(j);
      if (uniform(rng, 0.0, 1.0) < p.cue_density) {
        std::string bridge = "link" + pair_tag;
        inst.assertions.push_back(
            {"RelatedTo", planted[i], bridge, uniform(rng, 1.5, 2.5)});
        inst.assertions.push_back(
            {"RelatedTo", bridge, planted[j], uniform(rng, 1.5, 2.5)});
        if (uniform(rng, 0.0, 1.0) < 0.5) {
          // One stray out-edge so the attached cue leaves an open out-bond.
          inst.assertions.push_back(
              {"HasProperty", bridge, "stray" + pair_tag, uniform(rng, 0.5, 1.0)});
        }
      } else {
        inst.assertions.push_back(
            {"RelatedTo", planted[i], planted[j], uniform(rng, 1.5, 2.5)});
      }
      if (uniform(rng, 0.0, 1.0) < 0.7) {
        inst.assertions.push_back(
            {"RelatedTo", top[i], top[j], uniform(rng, -2.0, -0.5)});
      }
      for (const Candidate& a : inst.hypothesis.slots[i].candidates) {
        for (const Candidate& b : inst.hypothesis.slots[j].candidates) {
          if (a.concept_id == planted[i] && b.concept_id == planted[j]) continue;
          if (a.concept_id == top[i] && b.concept_id == top[j]) continue;
          if (uniform(rng, 0.0, 1.0) < 0.08) {
            inst.assertions.push_back({"RelatedTo", a.concept_id, b.concept_id,
                                       uniform(rng, 0.05, 0.3)});
          }
        }
      }
    }
  }
  return inst;
}

std::string assertions_to_tsv(const std::vector<SynthAssertion>& assertions) {
  std::ostringstream out;
  for (const SynthAssertion& a : assertions) {
    out << a.relation << '\t' << a.start << '\t' << a.end << '\t' << a.weight << '\n';
  }
  return out.str();
}

// Sorted candidate lists exactly as the ingestion path would produce them.
HypothesisSet canonical_hypothesis(const HypothesisSet& h, int k_max) {
  HypothesisSet out = h;
  for (Slot& slot : out.slots) {
    std::stable_sort(slot.candidates.begin(), slot.candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                       return a.confidence > b.confidence;
                     });
    if (static_cast<int>(slot.candidates.size()) > k_max) {
      slot.candidates.resize(k_max);
    }
  }
  return out;
}

bool planted_is_oracle_minimum(const Instance& inst, const SynthParams& p) {
  std::istringstream kg_stream(assertions_to_tsv(inst.assertions));
  auto kg = std::make_shared<KnowledgeGraph>(KnowledgeGraph::load(kg_stream));
  InferenceParams params;
  params.cues_per_pair = p.cues_per_pair;
  HypothesisSet sorted = canonical_hypothesis(inst.hypothesis, p.candidates);
  OracleResult oracle;
  try {
    oracle = oracle_search(sorted, kg, params, kValidationBudget);
  } catch (const BudgetError&) {
    return false;
  }
  if (oracle.ranked.empty()) return false;
  const Configuration& best = oracle.ranked.front().config;
  for (const Site& s : best.sites()) {
    if (s.gen.kind != GeneratorKind::Grounded) continue;
    const auto* prov = std::get_if<GroundedProvenance>(&s.gen.provenance);
    if (prov == nullptr) return false;
    auto it = inst.answer.planted.find(prov->slot);
    if (it == inst.answer.planted.end() || it->second != s.gen.concept_id) {
      return false;
    }
  }
  return true;
}

}  // namespace

void SynthParams::validate() const {
  if (instances < 1) throw Error("instance count must be positive");
  if (slots < 2 || slots > 5) throw Error("slot count must lie in [2, 5]");
  if (candidates < 2 || candidates > kBankSize) {
    throw Error("candidate count must lie in [2, 20]");
  }
  if ((slots - 1) * candidates > kBankSize) {
    throw Error("slot/candidate combination exhausts the concept bank");
  }
  if (kg_size < 0) throw Error("knowledge graph size must be nonnegative");
  if (cue_density < 0.0 || cue_density > 1.0) {
    throw Error("cue density must lie in [0, 1]");
  }
  if (cues_per_pair < 1) throw Error("cues per pair must be positive");
}

SynthOutput synthesize(const SynthParams& params) {
  params.validate();
  SynthOutput output;
  std::vector<SynthAssertion> all_assertions;
  std::ostringstream hypotheses;
  std::ostringstream answers;

  for (int index = 0; index < params.instances; ++index) {
    std::uint64_t instance_seed = derive_seed(params.seed, index);
    Instance inst;
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      std::mt19937_64 rng(derive_seed(instance_seed, attempt));
      inst = draw_instance(params, index, rng);
      if (planted_is_oracle_minimum(inst, params)) {
        accepted = true;
        output.retries += attempt;
        break;
      }
    }
    if (!accepted) {
      throw Error("instance " + segment_name(index) +
                  ": no draw produced a planted energy minimum");
    }

    all_assertions.insert(all_assertions.end(), inst.assertions.begin(),
                          inst.assertions.end());
    ordered_json line;
    line["segment"] = inst.hypothesis.segment;
    line["slots"] = ordered_json::array();
    for (const Slot& slot : inst.hypothesis.slots) {
      ordered_json raw_slot;
      raw_slot["id"] = slot.id;
      raw_slot["role"] = to_string(slot.role);
      raw_slot["candidates"] = ordered_json::array();
      for (const Candidate& candidate : slot.candidates) {
        raw_slot["candidates"].push_back(
            {{"concept", candidate.concept_id}, {"score", candidate.confidence}});
      }
      line["slots"].push_back(std::move(raw_slot));
    }
    hypotheses << line.dump() << '\n';

    ordered_json answer_line;
    answer_line["segment"] = inst.answer.segment;
    answer_line["planted"] = ordered_json::object();
    for (const auto& [slot, concept_id] : inst.answer.planted) {
      answer_line["planted"][slot] = concept_id;
    }
    answer_line["label"] = inst.answer.label;
    answers << answer_line.dump() << '\n';
    output.answers.push_back(inst.answer);
  }

  std::mt19937_64 filler_rng(derive_seed(params.seed, 0x66696c6cULL));
  int filler = 0;
  while (static_cast<int>(all_assertions.size()) < params.kg_size) {
    std::string tag = std::to_string(filler++);
    all_assertions.push_back({"RelatedTo", "fill" + tag + "a", "fill" + tag + "b",
                              uniform(filler_rng, 0.1, 1.0)});
  }

  std::ostringstream kg;
  kg << "# synthetic knowledge graph (" << all_assertions.size() << " assertions)\n";
  kg << assertions_to_tsv(all_assertions);
  output.kg_tsv = kg.str();
  output.hypotheses_jsonl = hypotheses.str();
  output.answers_jsonl = answers.str();
  return output;
}

std::vector<PlantedAnswer> load_answers(std::istream& in) {
  std::vector<PlantedAnswer> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ordered_json raw = ordered_json::parse(line, nullptr, false);
    if (raw.is_discarded() || !raw.is_object()) {
      throw ParseError(line_number, "invalid JSON");
    }
    PlantedAnswer answer;
    auto segment = raw.find("segment");
    auto planted = raw.find("planted");
    auto label = raw.find("label");
    if (segment == raw.end() || !segment->is_string() || planted == raw.end() ||
        !planted->is_object() || label == raw.end() || !label->is_string()) {
      throw ParseError(line_number, "expected segment, planted, and label fields");
    }
    answer.segment = segment->get<std::string>();
    answer.label = label->get<std::string>();
    for (const auto& [slot, concept_id] : planted->items()) {
      if (!concept_id.is_string()) {
        throw ParseError(line_number, "planted concepts must be strings");
      }
      answer.planted[slot] = concept_id.get<std::string>();
    }
    out.push_back(std::move(answer));
  }
  if (out.empty()) throw Error("no answers in input");
  return out;
}

std::vector<PlantedAnswer> load_answers_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open answers file: " + path);
  return load_answers(in);
}

}  // namespace ptsem
