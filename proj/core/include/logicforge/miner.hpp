#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "logicforge/corpus.hpp"

namespace logicforge::miner {

// Entity co-occurrence graph of one paragraph. Edge keys are unordered pairs
// stored as (smaller id, larger id); values are the supporting sentence
// indices. std::map/std::set keep iteration deterministic.
struct EntityGraph {
  std::set<std::string> nodes;
  std::map<std::pair<std::string, std::string>, std::set<int>> edges;
};

EntityGraph build_graph(const corpus::Paragraph& paragraph);

// A mention span inside RelationInstance::text.
struct TextMention {
  std::string entity_id;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const TextMention&) const = default;
};

struct RelationInstance {
  enum class Kind { Direct, Indirect };

  Kind kind = Kind::Direct;
  std::vector<std::string> entity_chain;
  std::vector<int> sentence_indices;  // chain order
  std::string text;                   // sentences joined by single spaces
  std::vector<TextMention> mentions;  // every annotated mention, chain or not
  bool is_negative = false;

  bool operator==(const RelationInstance&) const = default;
};

// Builds the instance text and remaps mention offsets from the paragraph.
RelationInstance make_instance(const corpus::Paragraph& paragraph, RelationInstance::Kind kind,
                               std::vector<std::string> entity_chain,
                               std::vector<int> sentence_indices);

struct LogicPair {
  std::string doc_id;
  std::string para_id;
  std::pair<std::string, std::string> anchors;  // (smaller id, larger id)
  RelationInstance direct;
  RelationInstance indirect;

  bool operator==(const LogicPair&) const = default;
};

// At most one pair per unordered anchor pair. The direct sentence is the
// smallest index mentioning both anchors. The indirect chain is a simple path
// of 2..l_max hops between the anchors whose sentences are pairwise distinct,
// exclude the direct sentence, and mention exactly their own two chain
// entities among the chain. Shorter chains win; ties resolve to the
// lexicographically smallest sentence-index sequence, then entity chain.
// Results are sorted by anchors.
std::vector<LogicPair> mine_pairs(const corpus::Paragraph& paragraph, int l_max = 4);

// Whole corpus, paragraphs in order; jobs > 1 parallelizes per paragraph
// without changing the output.
std::vector<LogicPair> mine_corpus(const corpus::Corpus& corpus, int l_max = 4, int jobs = 1);

// Key: number of sentences in the indirect chain.
std::map<int, long> chain_length_histogram(const std::vector<LogicPair>& pairs);

void save_pairs(const std::vector<LogicPair>& pairs, const std::filesystem::path& path);

// Rebuilds instance texts and mentions from the annotated corpus.
std::vector<LogicPair> load_pairs(const std::filesystem::path& path,
                                  const corpus::Corpus& corpus);

}  // namespace logicforge::miner
