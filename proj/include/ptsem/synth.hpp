#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

namespace ptsem {

struct SynthParams {
  int instances = 20;
  int slots = 2;
  int candidates = 5;
  int kg_size = 200;       // minimum assertion count, padded with fillers
  double cue_density = 0.5;
  std::uint64_t seed = 0;
  int cues_per_pair = 2;   // mirrors the parameters later used to solve
  void validate() const;
};

struct PlantedAnswer {
  std::string segment;
  std::map<std::string, std::string> planted;  // slot id -> concept
  std::string label;                           // "verb object"
};

struct SynthOutput {
  std::string kg_tsv;
  std::string hypotheses_jsonl;
  std::string answers_jsonl;
  std::vector<PlantedAnswer> answers;
  int retries = 0;  // instances redrawn until the planted answer won
};

// Random instances where a semantically coherent combination carries
// moderate confidences while a distractor outscores it on confidence
// alone. Every instance is checked against exhaustive search (the planted
// assignment must be the energy minimum) and redrawn when it is not.
SynthOutput synthesize(const SynthParams& params);

std::vector<PlantedAnswer> load_answers(std::istream& in);
std::vector<PlantedAnswer> load_answers_file(const std::string& path);

}  // namespace ptsem
