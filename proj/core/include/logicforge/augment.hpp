#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "logicforge/corpus.hpp"
#include "logicforge/miner.hpp"
#include "logicforge/rng.hpp"

namespace logicforge::augment {

struct Replacement {
  std::string entity_id;  // donor entity
  std::string surface;    // donor canonical surface

  bool operator==(const Replacement&) const = default;
};

// Original chain entity id -> donor replacement. Injective by construction.
using CounterfactualMap = std::map<std::string, Replacement>;

struct AugmentedPair {
  miner::LogicPair base;
  CounterfactualMap map;
  miner::RelationInstance direct;    // rewritten
  miner::RelationInstance indirect;  // rewritten
};

using MixedPair = std::variant<miner::LogicPair, AugmentedPair>;

bool is_counterfactual(const MixedPair& p);
const miner::RelationInstance& direct_of(const MixedPair& p);
const miner::RelationInstance& indirect_of(const MixedPair& p);
const miner::LogicPair& base_of(const MixedPair& p);

// Chain entities of the pair: union of the direct and indirect chains.
std::vector<std::string> chain_entities(const miner::LogicPair& pair);

// Samples one donor entity per chain entity, without replacement, among the
// donor paragraph's entities that are outside the chain. Surfaces are donor
// canonicals. Throws SameDocument / DonorTooSmall.
CounterfactualMap sample_counterfactual_map(const miner::LogicPair& pair,
                                            const corpus::Paragraph& donor,
                                            const corpus::Gazetteer& gazetteer, Rng& rng);

// Rewrites every mention of each mapped entity in both instances. Mention
// entity ids are preserved; only surfaces change, so offsets stay recoverable.
AugmentedPair apply_counterfactual_map(const miner::LogicPair& pair,
                                       const CounterfactualMap& map);

AugmentedPair counterfactualize(const miner::LogicPair& pair, const corpus::Paragraph& donor,
                                const corpus::Gazetteer& gazetteer, std::uint64_t seed);

// Splices the original surfaces back into the rewritten texts.
// Returns (direct text, indirect text); equal to the base texts byte for byte.
std::pair<std::string, std::string> invert_counterfactual(const AugmentedPair& pair);

// One sentence eligible as raw material for a synthesized negative.
struct PoolSentence {
  std::string doc_id;
  std::string para_id;
  int sentence_index = 0;
  std::string text;
  std::vector<miner::TextMention> mentions;
};

// Sentences with at least two distinct entity mentions, corpus order.
std::vector<PoolSentence> build_negative_pool(const corpus::Corpus& corpus);

// Picks a pool sentence from a different paragraph and replaces its first two
// distinct entity mentions with the anchors' surfaces as they appear in the
// pair's direct instance. Returns a Direct instance flagged negative.
miner::RelationInstance synthesize_negative(const miner::LogicPair& pair,
                                            const std::vector<PoolSentence>& pool, Rng& rng);

// Every normal pair followed by exactly cf_ratio counterfactual variants with
// distinct donors, then one global seeded shuffle. cf_ratio == 0 returns the
// input unchanged. |output| == |normals| * (1 + cf_ratio).
std::vector<MixedPair> mix(const std::vector<miner::LogicPair>& normals,
                           const corpus::Corpus& corpus, const corpus::Gazetteer& gazetteer,
                           int cf_ratio, std::uint64_t seed, int jobs = 1);

void save_mixed(const std::vector<MixedPair>& mixed, const std::filesystem::path& path);

// Counterfactual entries are rebuilt by re-applying the stored replacement
// map, which restores both the rewritten texts and their mention offsets; the
// stored texts are checked against the result.
std::vector<MixedPair> load_mixed(const std::filesystem::path& path,
                                  const corpus::Corpus& corpus);

}  // namespace logicforge::augment
