#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <ptsem/batch.hpp>
#include <ptsem/errors.hpp>
#include <ptsem/hypothesis.hpp>
#include <ptsem/inference.hpp>
#include <ptsem/knowledge_graph.hpp>
#include <ptsem/oracle.hpp>
#include <ptsem/render.hpp>
#include <ptsem/rng.hpp>
#include <ptsem/synth.hpp>

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kExitUsage = 1;
constexpr int kExitIngestion = 2;
constexpr int kExitRuntime = 3;

int fail(int code, const std::string& message) {
  std::cerr << "ptsem: " << message << "\n";
  return code;
}

std::string format_energy(double e) {
  if (e == 0.0) e = 0.0;  // never print "-0"
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", e);
  return buf;
}

struct IoOptions {
  std::string kg_path;
  std::string hypotheses_path;
  std::vector<std::string> symmetrize;
  int k_max = 5;
};

struct InterpretOptions {
  IoOptions io;
  ptsem::InferenceParams params;
  int workers = 1;
  std::string format = "json";
  std::string out_path;
  std::string counts_path;
  std::string verb_overrides_path;
};

struct OracleOptions {
  IoOptions io;
  ptsem::InferenceParams params;
  std::uint64_t budget = 1'000'000;
  std::string out_path;
};

struct EvalOptions {
  IoOptions io;
  ptsem::InferenceParams params;
  std::string answers_path;
  std::string report_path;
  std::uint64_t budget = 1'000'000;
  int workers = 1;
};

struct SynthOptions {
  ptsem::SynthParams params;
  std::string out_dir;
};

void add_io_flags(CLI::App* cmd, IoOptions* io) {
  cmd->add_option("--kg", io->kg_path, "Knowledge graph TSV file")->required();
  cmd->add_option("--hypotheses", io->hypotheses_path,
                  "Segment hypotheses JSONL file")
      ->required();
  cmd->add_option("--symmetrize", io->symmetrize,
                  "Relations whose reverse edge is added at load time")
      ->delimiter(',');
  cmd->add_option("--k-max", io->k_max,
                  "Keep at most this many candidates per slot");
}

void add_inference_flags(CLI::App* cmd, ptsem::InferenceParams* p) {
  cmd->add_option("--iterations", p->iterations, "Annealing iterations per chain");
  cmd->add_option("--initial-temperature", p->initial_temperature,
                  "Starting temperature");
  cmd->add_option("--cooling-ratio", p->cooling_ratio,
                  "Geometric cooling factor per iteration");
  cmd->add_option("--k-cost", p->k_cost, "Open-bond cost constant");
  cmd->add_option("--m-swap", p->m_swap,
                  "Alternatives sampled per local swap move");
  cmd->add_option("--cues-per-pair", p->cues_per_pair,
                  "Cue generators retained per ordered concept pair");
  cmd->add_option("--top-n", p->top_n, "Ranked interpretations to keep");
  cmd->add_option("--seed", p->rng_seed, "Master random seed");
  cmd->add_option("--local-ratio", p->local_ratio,
                  "Fraction of proposals using the local move");
  cmd->add_option("--max-semantic-bonds", p->max_semantic_bonds,
                  "Semantic bond sites per generator and direction");
  cmd->add_option("--chains", p->chains, "Independent annealing chains");
  cmd->add_flag("--q-count-in-bonds", p->q_count_in_bonds,
                "Also charge open in-bonds of cue generators");
  cmd->add_flag("--cues-strict", p->cues_strict,
                "Require both directions unasserted before proposing cues");
  cmd->add_flag("--relatedto-wildcard", p->relatedto_wildcard,
                "Let RelatedTo bond sites close against any relation");
}

struct LoadedInputs {
  std::shared_ptr<const ptsem::KnowledgeGraph> kg;
  std::vector<ptsem::HypothesisSet> segments;
};

LoadedInputs load_inputs(const IoOptions& io) {
  ptsem::KgLoadOptions kg_options;
  kg_options.symmetrize = io.symmetrize;
  LoadedInputs loaded;
  loaded.kg = std::make_shared<const ptsem::KnowledgeGraph>(
      ptsem::KnowledgeGraph::load_file(io.kg_path, kg_options));
  ptsem::HypothesisLoadOptions hyp_options;
  hyp_options.k_max = io.k_max;
  loaded.segments = ptsem::load_hypotheses_file(io.hypotheses_path, hyp_options);
  return loaded;
}

// Runs body() and writes its output to out_path, or stdout when the path is
// empty. Returns the process exit code.
int with_output(const std::string& out_path,
                const std::function<int(std::ostream&)>& body) {
  if (out_path.empty()) return body(std::cout);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) return fail(kExitRuntime, "cannot open output file: " + out_path);
  int code = body(out);
  out.flush();
  if (!out) return fail(kExitRuntime, "write failed: " + out_path);
  return code;
}

ordered_json interpretation_record(const ptsem::Interpretation& item, int rank) {
  ordered_json record;
  record["rank"] = rank;
  record["energy"] = item.energy;
  record["weight"] = item.config.probability_weight();
  record["connected"] = item.connected;
  record["content"] = ptsem::content_string(item.config);
  try {
    record["label"] = ptsem::to_label(item.config);
  } catch (const ptsem::MissingRoleError&) {
    record["label"] = nullptr;
  }
  record["key"] = item.key;
  record["configuration"] = ordered_json::parse(ptsem::to_json(item.config));
  return record;
}

std::string render_segment(const ptsem::HypothesisSet& segment,
                           const std::vector<ptsem::Interpretation>& ranked,
                           const InterpretOptions& options,
                           const ptsem::SentenceScorer& scorer,
                           const ptsem::VerbMorphology& morphology) {
  std::ostringstream out;
  if (options.format == "json") {
    ordered_json record;
    record["segment"] = segment.segment;
    record["interpretations"] = ordered_json::array();
    int rank = 1;
    for (const ptsem::Interpretation& item : ranked) {
      record["interpretations"].push_back(interpretation_record(item, rank++));
    }
    out << record.dump() << "\n";
  } else if (options.format == "caption") {
    int rank = 1;
    for (const ptsem::Interpretation& item : ranked) {
      ptsem::CaptionResult caption =
          ptsem::to_caption(item.config, scorer, morphology);
      out << segment.segment << "\t" << rank++ << "\t"
          << format_energy(item.energy) << "\t" << caption.sentence << "\n";
    }
  } else if (options.format == "label") {
    int rank = 1;
    for (const ptsem::Interpretation& item : ranked) {
      out << segment.segment << "\t" << rank++ << "\t"
          << format_energy(item.energy) << "\t" << ptsem::to_label(item.config)
          << "\n";
    }
  } else {
    int rank = 1;
    for (const ptsem::Interpretation& item : ranked) {
      out << "// segment=" << segment.segment << " rank=" << rank++
          << " energy=" << format_energy(item.energy) << "\n"
          << ptsem::to_dot(item.config);
    }
  }
  return out.str();
}

int run_interpret(const InterpretOptions& options) {
  try {
    options.params.validate();
  } catch (const std::exception& e) {
    return fail(kExitUsage, e.what());
  }

  LoadedInputs inputs;
  std::unique_ptr<ptsem::SentenceScorer> scorer;
  ptsem::VerbMorphology morphology;
  try {
    inputs = load_inputs(options.io);
    scorer = ptsem::make_scorer(options.counts_path);
    if (!options.verb_overrides_path.empty()) {
      morphology.load_overrides_file(options.verb_overrides_path);
    }
  } catch (const std::exception& e) {
    return fail(kExitIngestion, e.what());
  }

  try {
    std::function<std::string(std::size_t)> job = [&](std::size_t i) {
      ptsem::InferenceParams params = options.params;
      params.rng_seed = ptsem::derive_seed(options.params.rng_seed, i);
      ptsem::AnnealResult result =
          ptsem::anneal(inputs.segments[i], inputs.kg, params);
      return render_segment(inputs.segments[i], result.ranked, options, *scorer,
                            morphology);
    };
    std::vector<std::string> blocks =
        ptsem::parallel_map<std::string>(inputs.segments.size(), options.workers, job);
    return with_output(options.out_path, [&](std::ostream& out) {
      for (const std::string& block : blocks) out << block;
      return 0;
    });
  } catch (const std::exception& e) {
    return fail(kExitRuntime, e.what());
  }
}

int run_oracle(const OracleOptions& options) {
  try {
    options.params.validate();
  } catch (const std::exception& e) {
    return fail(kExitUsage, e.what());
  }

  LoadedInputs inputs;
  try {
    inputs = load_inputs(options.io);
  } catch (const std::exception& e) {
    return fail(kExitIngestion, e.what());
  }

  try {
    std::ostringstream body;
    for (const ptsem::HypothesisSet& segment : inputs.segments) {
      ptsem::OracleResult result =
          ptsem::oracle_search(segment, inputs.kg, options.params, options.budget);
      ordered_json record;
      record["segment"] = segment.segment;
      record["space_size"] = result.space_size;
      record["interpretations"] = ordered_json::array();
      int rank = 1;
      std::size_t keep = std::min<std::size_t>(result.ranked.size(),
                                               static_cast<std::size_t>(options.params.top_n));
      for (std::size_t i = 0; i < keep; ++i) {
        record["interpretations"].push_back(
            interpretation_record(result.ranked[i], rank++));
      }
      body << record.dump() << "\n";
    }
    return with_output(options.out_path, [&](std::ostream& out) {
      out << body.str();
      return 0;
    });
  } catch (const std::exception& e) {
    return fail(kExitRuntime, e.what());
  }
}

int run_synth(const SynthOptions& options) {
  try {
    options.params.validate();
  } catch (const std::exception& e) {
    return fail(kExitUsage, e.what());
  }

  try {
    ptsem::SynthOutput output = ptsem::synthesize(options.params);
    std::filesystem::create_directories(options.out_dir);
    auto write_file = [&](const std::string& name, const std::string& text) {
      std::filesystem::path path = std::filesystem::path(options.out_dir) / name;
      std::ofstream out(path, std::ios::binary);
      if (!out) throw ptsem::Error("cannot open output file: " + path.string());
      out << text;
      out.flush();
      if (!out) throw ptsem::Error("write failed: " + path.string());
    };
    write_file("kg.tsv", output.kg_tsv);
    write_file("hypotheses.jsonl", output.hypotheses_jsonl);
    write_file("answers.jsonl", output.answers_jsonl);
    std::cout << "wrote " << options.params.instances << " instances to "
              << options.out_dir << " (retries=" << output.retries << ")\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(kExitRuntime, e.what());
  }
}

struct EvalRow {
  std::string segment;
  bool refused = false;
  std::uint64_t space_size = 0;
  double oracle_energy = 0.0;
  double anneal_energy = 0.0;
  int label_match = -1;  // -1: no planted answer on file
  std::string planted_label = "NA";
  std::string predicted_label = "NA";
  long long wall_ms = 0;
};

int run_eval(const EvalOptions& options) {
  try {
    options.params.validate();
  } catch (const std::exception& e) {
    return fail(kExitUsage, e.what());
  }

  LoadedInputs inputs;
  std::map<std::string, ptsem::PlantedAnswer> answers;
  try {
    inputs = load_inputs(options.io);
    for (ptsem::PlantedAnswer& answer :
         ptsem::load_answers_file(options.answers_path)) {
      answers[answer.segment] = std::move(answer);
    }
  } catch (const std::exception& e) {
    return fail(kExitIngestion, e.what());
  }

  try {
    std::function<EvalRow(std::size_t)> job = [&](std::size_t i) {
      const ptsem::HypothesisSet& segment = inputs.segments[i];
      EvalRow row;
      row.segment = segment.segment;
      ptsem::InferenceParams params = options.params;
      params.rng_seed = ptsem::derive_seed(options.params.rng_seed, i);
      auto start = std::chrono::steady_clock::now();
      ptsem::AnnealResult result = ptsem::anneal(segment, inputs.kg, params);
      row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
      if (result.ranked.empty()) throw ptsem::Error("no interpretations found");
      row.anneal_energy = result.ranked.front().energy;
      try {
        row.predicted_label = ptsem::to_label(result.ranked.front().config);
      } catch (const ptsem::MissingRoleError&) {
        row.predicted_label = "NA";
      }
      try {
        ptsem::OracleResult oracle =
            ptsem::oracle_search(segment, inputs.kg, params, options.budget);
        row.oracle_energy = oracle.ranked.front().energy;
      } catch (const ptsem::BudgetError& e) {
        row.refused = true;
        row.space_size = e.space_size;
      }
      auto found = answers.find(segment.segment);
      if (found != answers.end()) {
        row.planted_label = found->second.label;
        row.label_match = row.predicted_label == found->second.label ? 1 : 0;
      }
      return row;
    };
    std::vector<EvalRow> rows = ptsem::parallel_map<EvalRow>(
        inputs.segments.size(), options.workers, job);

    std::ostringstream body;
    body << "segment\toracle_energy\tanneal_energy\tenergy_gap\tlabel_match\t"
            "planted_label\tpredicted_label\twall_ms\tstatus\n";
    double gap_sum = 0.0;
    std::size_t gap_count = 0;
    std::size_t match_sum = 0;
    std::size_t match_count = 0;
    long long wall_total = 0;
    for (const EvalRow& row : rows) {
      body << row.segment << "\t";
      if (row.refused) {
        body << "NA\t" << format_energy(row.anneal_energy) << "\tNA\t";
      } else {
        double gap = row.anneal_energy - row.oracle_energy;
        gap_sum += gap;
        ++gap_count;
        body << format_energy(row.oracle_energy) << "\t"
             << format_energy(row.anneal_energy) << "\t" << format_energy(gap)
             << "\t";
      }
      if (row.label_match < 0) {
        body << "NA\t";
      } else {
        body << row.label_match << "\t";
        match_sum += static_cast<std::size_t>(row.label_match);
        ++match_count;
      }
      body << row.planted_label << "\t" << row.predicted_label << "\t"
           << row.wall_ms << "\t"
           << (row.refused ? "budget_refused(size=" + std::to_string(row.space_size) + ")"
                           : "ok")
           << "\n";
    }
    char rate[64];
    std::snprintf(rate, sizeof(rate), "%.4f",
                  match_count == 0 ? 0.0
                                   : static_cast<double>(match_sum) /
                                         static_cast<double>(match_count));
    for (const EvalRow& row : rows) wall_total += row.wall_ms;
    body << "ALL\tNA\tNA\t"
         << (gap_count == 0 ? std::string("NA")
                            : format_energy(gap_sum / static_cast<double>(gap_count)))
         << "\t" << rate << "\tNA\tNA\t" << wall_total << "\tok\n";
    return with_output(options.report_path, [&](std::ostream& out) {
      out << body.str();
      return 0;
    });
  } catch (const std::exception& e) {
    return fail(kExitRuntime, e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-guided interpretation of video activity hypotheses"};
  app.require_subcommand(1);

  InterpretOptions interpret_options;
  CLI::App* interpret = app.add_subcommand(
      "interpret", "Fuse segment hypotheses with the knowledge graph");
  add_io_flags(interpret, &interpret_options.io);
  add_inference_flags(interpret, &interpret_options.params);
  interpret->add_option("--output-format", interpret_options.format,
                        "Output format")
      ->check(CLI::IsMember({"json", "caption", "label", "dot"}));
  interpret->add_option("--out", interpret_options.out_path,
                        "Output file (default stdout)");
  interpret->add_option("--scorer-counts", interpret_options.counts_path,
                        "N-gram counts TSV for caption scoring");
  interpret->add_option("--verb-overrides", interpret_options.verb_overrides_path,
                        "Irregular verb forms TSV");
  interpret->add_option("--workers", interpret_options.workers,
                        "Segments processed in parallel")
      ->check(CLI::PositiveNumber);

  OracleOptions oracle_options;
  CLI::App* oracle = app.add_subcommand(
      "oracle", "Exhaustively rank every configuration in the search space");
  add_io_flags(oracle, &oracle_options.io);
  add_inference_flags(oracle, &oracle_options.params);
  oracle->add_option("--budget", oracle_options.budget,
                     "Refuse search spaces larger than this");
  oracle->add_option("--out", oracle_options.out_path,
                     "Output file (default stdout)");

  SynthOptions synth_options;
  CLI::App* synth = app.add_subcommand(
      "synth", "Generate solvable synthetic instances with planted answers");
  synth->add_option("--out-dir", synth_options.out_dir, "Output directory")
      ->required();
  synth->add_option("--instances", synth_options.params.instances,
                    "Instances to generate");
  synth->add_option("--slots", synth_options.params.slots, "Slots per instance");
  synth->add_option("--candidates", synth_options.params.candidates,
                    "Candidates per slot");
  synth->add_option("--kg-size", synth_options.params.kg_size,
                    "Minimum knowledge-graph assertion count");
  synth->add_option("--cue-density", synth_options.params.cue_density,
                    "Probability a planted pair links through a cue");
  synth->add_option("--seed", synth_options.params.seed, "Master random seed");
  synth->add_option("--cues-per-pair", synth_options.params.cues_per_pair,
                    "Cue budget assumed during instance validation");

  EvalOptions eval_options;
  CLI::App* eval = app.add_subcommand(
      "eval", "Compare annealing with exhaustive search and planted answers");
  add_io_flags(eval, &eval_options.io);
  add_inference_flags(eval, &eval_options.params);
  eval->add_option("--answers", eval_options.answers_path,
                   "Planted answers JSONL file")
      ->required();
  eval->add_option("--report", eval_options.report_path,
                   "Report TSV file (default stdout)");
  eval->add_option("--budget", eval_options.budget,
                   "Refuse oracle spaces larger than this");
  eval->add_option("--workers", eval_options.workers,
                   "Segments processed in parallel")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (interpret->parsed()) return run_interpret(interpret_options);
  if (oracle->parsed()) return run_oracle(oracle_options);
  if (synth->parsed()) return run_synth(synth_options);
  return run_eval(eval_options);
}
