#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "logicforge/augment.hpp"
#include "logicforge/corpus.hpp"
#include "logicforge/rng.hpp"

namespace logicforge::dataset {

enum class Direction { DirectToIndirect, IndirectToDirect };

const char* to_string(Direction d);          // "d2i" / "i2d"
Direction direction_from_string(const std::string& s);

struct TrainingExample {
  std::vector<int> condition;  // word ids, no specials
  std::vector<int> target;
  Direction direction = Direction::DirectToIndirect;
  bool is_counterfactual = false;

  bool operator==(const TrainingExample&) const = default;
};

struct LMExample {
  std::vector<int> tokens;  // BOS ... EOS

  bool operator==(const LMExample&) const = default;
};

struct LogicDataset {
  std::vector<TrainingExample> examples;
};

struct LMDataset {
  std::vector<LMExample> examples;
};

struct EncodeReport {
  std::size_t kept = 0;
  std::size_t dropped = 0;  // over the context window
};

// Row layout: BOS condition SEP target EOS; the loss mask covers the target
// tokens and EOS. Throws TooLong when the row exceeds the context window.
TrainingExample encode_pair(const std::string& condition_text, const std::string& target_text,
                            bool is_counterfactual, const corpus::Vocab& vocab,
                            Direction direction, int context_window);

// Both directions of one mixed pair, d2i first.
std::vector<TrainingExample> encode_pair_both(const augment::MixedPair& pair,
                                              const corpus::Vocab& vocab, int context_window);

// Two directed examples per pair; over-length rows are dropped and counted.
LogicDataset build_logic_dataset(const std::vector<augment::MixedPair>& pairs,
                                 const corpus::Vocab& vocab, int context_window,
                                 EncodeReport* report = nullptr);

// BOS paragraph EOS; over-length rows are dropped and counted.
LMDataset build_lm_dataset(const corpus::Corpus& corpus, const corpus::Vocab& vocab,
                           int context_window, EncodeReport* report = nullptr);

struct Batch {
  enum class RowKind { Logic, LM };

  std::vector<std::vector<int>> tokens;      // [rows][T], right-padded with PAD
  std::vector<std::vector<uint8_t>> mask;    // 1 where the token is a loss target
  std::vector<int> lengths;                  // real length per row
  std::vector<RowKind> kinds;

  std::size_t rows() const { return tokens.size(); }
  std::size_t width() const { return tokens.empty() ? 0 : tokens.front().size(); }
};

std::vector<int> logic_row_tokens(const TrainingExample& ex);
std::vector<uint8_t> logic_row_mask(const TrainingExample& ex);

// b logic rows plus b language-model rows, drawn uniformly with replacement,
// shuffled together.
Batch sample_mixed_batch(const LogicDataset& logic, const LMDataset& lm, int b, Rng& rng);

// Single-kind batches for the ablations.
Batch sample_logic_batch(const LogicDataset& logic, int rows, Rng& rng);
Batch sample_lm_batch(const LMDataset& lm, int rows, Rng& rng);

void save_logic_dataset(const LogicDataset& ds, const std::filesystem::path& path);
LogicDataset load_logic_dataset(const std::filesystem::path& path);
void save_lm_dataset(const LMDataset& ds, const std::filesystem::path& path);
LMDataset load_lm_dataset(const std::filesystem::path& path);

}  // namespace logicforge::dataset
