#include "ptsem/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "ptsem/concept.hpp"
#include "ptsem/errors.hpp"

namespace ptsem {
namespace {

using nlohmann::json;

std::string require_string(const json& obj, const char* key, int line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(line, std::string("missing string field '") + key + "'");
  }
  return it->get<std::string>();
}

double require_number(const json& obj, const char* key, int line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw ParseError(line, std::string("missing numeric field '") + key + "'");
  }
  double value = it->get<double>();
  if (!std::isfinite(value)) {
    throw ParseError(line, std::string("field '") + key + "' is not finite");
  }
  return value;
}

const json& require_array(const json& obj, const char* key, int line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_array()) {
    throw ParseError(line, std::string("missing array field '") + key + "'");
  }
  return *it;
}

Slot parse_slot(const json& raw, int line) {
  if (!raw.is_object()) throw ParseError(line, "slot entry is not an object");
  Slot slot;
  slot.id = require_string(raw, "id", line);
  if (slot.id.empty()) throw ParseError(line, "slot id is empty");
  std::string role_name = require_string(raw, "role", line);
  auto role = parse_slot_role(role_name);
  if (!role) throw ParseError(line, "unknown slot role '" + role_name + "'");
  slot.role = *role;

  const json& candidates = require_array(raw, "candidates", line);
  if (candidates.empty()) {
    throw ParseError(line, "slot '" + slot.id + "' has no candidates");
  }
  std::set<std::string> seen;
  for (const auto& raw_candidate : candidates) {
    if (!raw_candidate.is_object()) {
      throw ParseError(line, "candidate entry is not an object");
    }
    Candidate candidate;
    candidate.concept_id = normalize_concept(require_string(raw_candidate, "concept", line));
    if (!is_valid_concept(candidate.concept_id)) {
      throw ParseError(line, "invalid concept name in slot '" + slot.id + "'");
    }
    candidate.confidence = require_number(raw_candidate, "score", line);
    if (!seen.insert(candidate.concept_id).second) {
      throw ParseError(line, "duplicate concept '" + candidate.concept_id + "' in slot '" +
                                 slot.id + "'");
    }
    slot.candidates.push_back(std::move(candidate));
  }
  return slot;
}

}  // namespace

std::vector<HypothesisSet> load_hypotheses(std::istream& in,
                                           const HypothesisLoadOptions& options) {
  if (options.k_max < 1) throw Error("candidate cap must be at least 1");
  std::vector<HypothesisSet> out;
  std::set<std::string> segments;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;

    json raw = json::parse(line, nullptr, false);
    if (raw.is_discarded()) throw ParseError(line_number, "invalid JSON");
    if (!raw.is_object()) throw ParseError(line_number, "expected a JSON object");

    HypothesisSet set;
    set.segment = require_string(raw, "segment", line_number);
    if (set.segment.empty()) throw ParseError(line_number, "segment name is empty");
    if (!segments.insert(set.segment).second) {
      throw ParseError(line_number, "duplicate segment '" + set.segment + "'");
    }
    const json& slots = require_array(raw, "slots", line_number);
    if (slots.empty()) throw ParseError(line_number, "segment has no slots");
    std::set<std::string> slot_ids;
    for (const auto& raw_slot : slots) {
      Slot slot = parse_slot(raw_slot, line_number);
      if (!slot_ids.insert(slot.id).second) {
        throw ParseError(line_number, "duplicate slot id '" + slot.id + "'");
      }
      std::stable_sort(slot.candidates.begin(), slot.candidates.end(),
                       [](const Candidate& a, const Candidate& b) {
                         return a.confidence > b.confidence;
                       });
      if (static_cast<int>(slot.candidates.size()) > options.k_max) {
        slot.candidates.resize(options.k_max);
      }
      set.slots.push_back(std::move(slot));
    }
    out.push_back(std::move(set));
  }
  if (out.empty()) throw Error("no segments in hypothesis input");
  return out;
}

std::vector<HypothesisSet> load_hypotheses_file(const std::string& path,
                                                const HypothesisLoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open hypothesis file: " + path);
  return load_hypotheses(in, options);
}

}  // namespace ptsem
