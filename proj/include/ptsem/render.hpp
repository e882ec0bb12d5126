#pragma once

#include <istream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ptsem/configuration.hpp"

namespace ptsem {

class SentenceScorer {
 public:
  virtual ~SentenceScorer() = default;
  // Higher is preferred; must be deterministic.
  virtual double score(const std::string& sentence) const = 0;
};

class UniformScorer : public SentenceScorer {
 public:
  double score(const std::string&) const override { return 0.0; }
};

// Additive log-frequency of unigrams and adjacent bigrams from a counts
// table (TSV `token[ token]<TAB>count`). Unknown n-grams are floored so
// every sentence stays scorable.
class NgramFrequencyScorer : public SentenceScorer {
 public:
  static NgramFrequencyScorer load(std::istream& in);
  static NgramFrequencyScorer load_file(const std::string& path);
  double score(const std::string& sentence) const override;

 private:
  std::map<std::string, double> counts_;
};

// Counts-file scorer when the path names a readable file, uniform scorer
// otherwise (including the empty path).
std::unique_ptr<SentenceScorer> make_scorer(const std::string& counts_path);

// Regular inflection with a small override table for irregular and
// consonant-doubling exceptions.
class VerbMorphology {
 public:
  VerbMorphology();
  void add_override(const std::string& base, const std::string& third,
                    const std::string& participle);
  void load_overrides(std::istream& in);
  void load_overrides_file(const std::string& path);
  // Inflects the first word of a multiword verb ("turn on" -> "turns on").
  std::string third_person(const std::string& verb) const;
  std::string participle(const std::string& verb) const;

 private:
  struct Forms {
    std::string third;
    std::string participle;
  };
  std::map<std::string, Forms> overrides_;
};

struct CaptionCandidate {
  std::string sentence;
  double score = 0.0;
};

struct CaptionResult {
  std::string sentence;
  double score = 0.0;
  std::vector<CaptionCandidate> candidates;  // sorted by sentence text
};

// Fills the caption template (determiner, subject, verb with tense,
// optional preposition, determiner, object) from the grounded subject /
// action / object concepts, scores every filling, and returns the argmax.
// Score ties resolve to the lexicographically smallest sentence. Cue
// concepts never appear in the sentence.
CaptionResult to_caption(const Configuration& c, const SentenceScorer& scorer,
                         const VerbMorphology& morphology = VerbMorphology());

// Lowercase "<base verb> <object>" activity label.
std::string to_label(const Configuration& c);

// Grounded concepts followed by their parenthesized cues, e.g.
// "pour oil (liquid) (fuel) (black)".
std::string content_string(const Configuration& c);

// Canonical single-line JSON: byte-identical for structurally identical
// configurations.
std::string to_json(const Configuration& c);
Configuration configuration_from_json(const std::string& text,
                                      std::shared_ptr<const KnowledgeGraph> kg = nullptr);

// DOT digraph: grounded nodes boxed, ungrounded red, feature nodes dashed;
// edges labeled with bond value and energy.
std::string to_dot(const Configuration& c);

}  // namespace ptsem
