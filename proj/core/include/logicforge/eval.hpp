#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "logicforge/augment.hpp"
#include "logicforge/corpus.hpp"
#include "logicforge/miner.hpp"
#include "logicforge/model.hpp"

namespace logicforge::eval {

// Prompt layouts for zero-shot multiple choice. reclor/logiqa/race phrase the
// instruction around a context passage; mmlu is the subject-header layout and
// reads MCQItem::context as the subject name.
enum class PromptStyle { Reclor, Logiqa, Race, Mmlu };

PromptStyle prompt_style_from_string(const std::string& s);  // throws InvalidConfig
std::string to_string(PromptStyle style);

struct MCQItem {
  std::string context;
  std::string question;
  std::vector<std::string> options;
  int answer_index = 0;
};

// Full display prompt, options block included. Byte-stable: tests freeze it.
std::string format_prompt(const MCQItem& item, PromptStyle style);

// The prompt minus the options block. Options are scored as continuations of
// this text, which makes per-option scores independent of option order.
std::string scoring_condition(const MCQItem& item, PromptStyle style);

struct OptionScores {
  std::vector<double> scores;  // higher is better
  int predicted = -1;          // ties resolve to the smallest index
};

// length_normalize divides each option's log-likelihood by its token count.
// Throws SequenceTooLong when condition + option exceed the context window.
OptionScores score_mcq(const model::ModelParams& params, const corpus::Vocab& vocab,
                       const MCQItem& item, PromptStyle style, bool length_normalize = true);

struct EvalResult {
  double accuracy = 0.0;  // over scored items
  long n_correct = 0;
  long n_scored = 0;
  long n_skipped = 0;            // over-length items
  std::vector<int> predictions;  // -1 for skipped
};

EvalResult evaluate(const model::ModelParams& params, const corpus::Vocab& vocab,
                    const std::vector<MCQItem>& items, PromptStyle style,
                    bool length_normalize = true);

struct RobustnessResult {
  std::vector<double> runs;  // run 0 is the unshuffled order
  double min_accuracy = 0.0;
  double max_accuracy = 0.0;
  double mean_accuracy = 0.0;
  double stddev = 0.0;  // population
};

// k evaluation runs over option-order permutations; run 0 keeps the original
// order, later runs draw a seeded permutation per item and remap the answer.
RobustnessResult shuffle_robustness(const model::ModelParams& params, const corpus::Vocab& vocab,
                                    const std::vector<MCQItem>& items, PromptStyle style,
                                    int k = 5, std::uint64_t seed = 0,
                                    bool length_normalize = true);

struct GapExample {
  std::vector<int> condition;
  std::vector<int> target;
};

struct GapSets {
  std::vector<GapExample> consistent;
  std::vector<GapExample> inconsistent;
};

// Consistent examples pair each relation with its counterpart in both
// directions; inconsistent ones swap the target for a synthesized negative.
GapSets build_gap_sets(const std::vector<miner::LogicPair>& pairs,
                       const std::vector<augment::PoolSentence>& pool,
                       const corpus::Vocab& vocab, int context_window, std::uint64_t seed);

struct GapResult {
  double nll_consistent = 0.0;    // mean over examples of per-token NLL
  double nll_inconsistent = 0.0;
  double gap = 0.0;               // inconsistent minus consistent
};

GapResult consistency_gap(const model::ModelParams& params, const GapSets& sets);

// Multiple-choice probe: given a relation sentence, pick the chain that is
// consistent with it. Wrong options are chains lifted from other pairs and
// rewritten over relations attested elsewhere in the pair set, so they read
// just as fluently as the answer but start or end off this item's anchors;
// when no such rewrite exists the item falls back to splicing the anchors
// over a foreign chain or re-telling one about fresh entities.
// Throws NotEnoughPairs when the corpus is too small.
std::vector<MCQItem> build_probe_benchmark(const std::vector<miner::LogicPair>& pairs,
                                           const corpus::Gazetteer& gazetteer, int n_distractors,
                                           std::uint64_t seed);

void save_mcq_items(const std::filesystem::path& path, const std::vector<MCQItem>& items);
std::vector<MCQItem> load_mcq_items(const std::filesystem::path& path);

void write_eval_report(const std::filesystem::path& path, const EvalResult& result);
void write_robustness_report(const std::filesystem::path& path, const RobustnessResult& result);
void write_gap_report(const std::filesystem::path& path, const GapResult& result);

}  // namespace logicforge::eval
