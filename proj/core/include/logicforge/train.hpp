#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "logicforge/augment.hpp"
#include "logicforge/corpus.hpp"
#include "logicforge/dataset.hpp"
#include "logicforge/model.hpp"

namespace logicforge::train {

enum class Objective { LogicPlusLM, LMOnly, Contrastive };

Objective objective_from_string(const std::string& s);  // throws InvalidConfig
std::string to_string(Objective objective);

struct TrainConfig {
  long steps = 2000;
  int batch_size = 8;
  double lr = 1e-3;
  int cf_ratio = 3;
  Objective objective = Objective::LogicPlusLM;
  std::uint64_t seed = 0;
  long eval_every = 100;
  std::string checkpoint_dir = "checkpoints";
  int context_window = 128;
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;

  void validate() const;  // throws InvalidConfig
};

// Flat "key = value" TOML: comments, quoted strings, ints, floats. Unknown
// keys are rejected so typos cannot silently fall back to defaults.
TrainConfig parse_train_config_text(const std::string& text);
TrainConfig parse_train_config(const std::filesystem::path& path);

struct DualLoss {
  double logic_nll = 0.0;
  double lm_nll = 0.0;
  double total() const { return logic_nll + lm_nll; }
};

// Per-kind means over masked token positions; rows of the other kind are
// untouched. Throws AllMaskedOut when the batch has no rows of that kind.
double logic_loss(const model::ModelParams& params, const dataset::Batch& batch,
                  model::ModelParams* grads);
double lm_loss(const model::ModelParams& params, const dataset::Batch& batch,
               model::ModelParams* grads);
DualLoss dual_loss(const model::ModelParams& params, const dataset::Batch& batch,
                   model::ModelParams* grads);

// Length-normalized log-likelihood of candidate as a continuation:
// mean_t log P(candidate[t] | bos, condition, sep, candidate[<t]).
double token_score(const model::ModelParams& params, const std::vector<int>& condition,
                   const std::vector<int>& candidate);

struct CandidateSet {
  std::vector<int> condition;
  std::vector<int> positive;
  std::vector<std::vector<int>> negatives;
};

// One positive plus synthesized negatives per direction of each pair.
// Negatives splice the pair's anchors into foreign sentences drawn from the
// pool. Over-length sets are dropped.
struct CandidateBuildReport {
  std::vector<CandidateSet> sets;
  std::size_t dropped = 0;
};
CandidateBuildReport build_candidate_sets(const std::vector<augment::MixedPair>& pairs,
                                          const std::vector<augment::PoolSentence>& pool,
                                          const corpus::Vocab& vocab, int n_negatives,
                                          int context_window, std::uint64_t seed);

void save_candidate_sets(const std::filesystem::path& path,
                         const std::vector<CandidateSet>& sets);
std::vector<CandidateSet> load_candidate_sets(const std::filesystem::path& path);

// softmax-margin loss over one set: logsumexp of every candidate's score minus
// the positive's. Equal scores give ln(1 + #negatives). Gradients (scaled by
// grad_scale) are accumulated when grads is non-null.
double contrastive_loss(const model::ModelParams& params, const CandidateSet& set,
                        model::ModelParams* grads, double grad_scale);

struct MetricsRow {
  long step = 0;
  double logic_nll = 0.0;
  double lm_nll = 0.0;
  double total_nll = 0.0;
  long examples_seen = 0;
};

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);

struct TrainInputs {
  dataset::LogicDataset logic;
  dataset::LMDataset lm;
  std::vector<CandidateSet> candidates;  // contrastive objective only
  int vocab_size = 0;
};

struct TrainResult {
  model::ModelParams params;
  std::vector<MetricsRow> metrics;
  std::vector<std::filesystem::path> checkpoints;
};

// Single-threaded and bit-deterministic for a given config and inputs. Losses
// for the metrics rows are measured on one fixed probe batch so curves are
// comparable across steps (and constant when lr == 0). Checkpoints land in
// config.checkpoint_dir every eval_every steps plus a final one.
TrainResult train_loop(const TrainConfig& config, const TrainInputs& inputs);

}  // namespace logicforge::train
