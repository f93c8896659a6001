#pragma once

#include <cstdint>

#include "logicforge/corpus.hpp"
#include "logicforge/miner.hpp"

namespace logicforge::corpus {

struct GenConfig {
  std::uint64_t seed = 0;
  int n_docs = 100;
  int n_entities = 5;   // per paragraph, >= 3
  int n_sentences = 7;  // per paragraph, >= 3
  int entity_pool = 0;  // 0 derives 12 * n_entities
};

struct Synthetic {
  Corpus corpus;  // annotated
  Gazetteer gazetteer;
  std::vector<miner::LogicPair> truth;  // exhaustively enumerated, mining rules
};

// One paragraph per document. Each paragraph plants an entity chain plus one
// direct sentence between the chain endpoints; the direct sentence's verb is
// the modular sum of the chain verbs, so the corpus carries a learnable
// consistency rule. Remaining slots are fillers or relations over non-chain
// entities. Pure function of the config.
Synthetic gen_synthetic_corpus(const GenConfig& config);

}  // namespace logicforge::corpus
