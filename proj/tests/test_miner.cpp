#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "logicforge/corpus.hpp"
#include "logicforge/errors.hpp"
#include "logicforge/gen.hpp"
#include "logicforge/miner.hpp"
#include "logicforge/rng.hpp"
#include "mining_oracle.hpp"
#include "temp_dir.hpp"

using namespace logicforge;
using corpus::Gazetteer;
using corpus::Paragraph;
using miner::LogicPair;
using miner::RelationInstance;

using testutil::annotated_paragraph;
using testutil::oracle_mine;

namespace {

const Gazetteer kAbc{{"eA", "Alice", {}}, {"eB", "Bob", {}}, {"eC", "Carol", {}},
                     {"eD", "Dave", {}},  {"eE", "Eve", {}}};

}  // namespace

TEST_SUITE("miner") {

TEST_CASE("graph collects co-mention edges per sentence") {
  Paragraph p = annotated_paragraph(
      {"Alice met Bob .", "Bob met Carol .", "Alice met Bob and Carol ."}, kAbc);
  miner::EntityGraph g = miner::build_graph(p);
  CHECK(g.nodes == std::set<std::string>{"eA", "eB", "eC"});
  CHECK(g.edges.at({"eA", "eB"}) == std::set<int>{0, 2});
  CHECK(g.edges.at({"eB", "eC"}) == std::set<int>{1, 2});
  CHECK(g.edges.at({"eA", "eC"}) == std::set<int>{2});
}

TEST_CASE("triangle paragraph yields all three pairs") {
  Paragraph p = annotated_paragraph(
      {"Alice met Bob .", "Bob met Carol .", "Alice met Carol ."}, kAbc);
  auto pairs = miner::mine_pairs(p);
  REQUIRE(pairs.size() == 3);

  // sorted by anchors: (eA,eB), (eA,eC), (eB,eC)
  CHECK(pairs[0].anchors == std::pair<std::string, std::string>{"eA", "eB"});
  CHECK(pairs[0].direct.sentence_indices == std::vector<int>{0});
  CHECK(pairs[0].indirect.entity_chain == std::vector<std::string>{"eA", "eC", "eB"});
  CHECK(pairs[0].indirect.sentence_indices == std::vector<int>{2, 1});

  CHECK(pairs[1].anchors == std::pair<std::string, std::string>{"eA", "eC"});
  CHECK(pairs[1].direct.sentence_indices == std::vector<int>{2});
  CHECK(pairs[1].direct.text == "Alice met Carol .");
  CHECK(pairs[1].indirect.entity_chain == std::vector<std::string>{"eA", "eB", "eC"});
  CHECK(pairs[1].indirect.sentence_indices == std::vector<int>{0, 1});
  CHECK(pairs[1].indirect.text == "Alice met Bob . Bob met Carol .");

  CHECK(pairs[2].anchors == std::pair<std::string, std::string>{"eB", "eC"});
  CHECK(pairs[2].indirect.sentence_indices == std::vector<int>{0, 2});
}

TEST_CASE("instance mentions carry remapped offsets") {
  Paragraph p = annotated_paragraph(
      {"Alice met Bob .", "Bob met Carol .", "Alice met Carol ."}, kAbc);
  auto pairs = miner::mine_pairs(p);
  const RelationInstance& ind = pairs[1].indirect;  // two sentences joined
  REQUIRE(ind.mentions.size() == 4);
  for (const auto& m : ind.mentions) {
    std::string surface = ind.text.substr(m.start, m.end - m.start);
    CHECK((surface == "Alice" || surface == "Bob" || surface == "Carol"));
  }
  // "Bob" of sentence 1 starts after "Alice met Bob . "
  CHECK(ind.mentions[2].start == 16);
}

TEST_CASE("chain sentences may not mention other chain entities") {
  // s1 mentions eA as well, so the only 2-hop chain for (eA, eC) is broken.
  Paragraph p = annotated_paragraph(
      {"Alice met Bob .", "Bob met Carol near Alice .", "Alice met Carol ."}, kAbc);
  auto pairs = miner::mine_pairs(p);
  for (const auto& pr : pairs)
    CHECK(pr.anchors != std::pair<std::string, std::string>{"eA", "eC"});
}

TEST_CASE("non-chain entities in a chain sentence are fine") {
  Paragraph p = annotated_paragraph(
      {"Alice met Bob near Eve .", "Bob met Carol .", "Alice met Carol ."}, kAbc);
  auto pairs = miner::mine_pairs(p);
  bool found = false;
  for (const auto& pr : pairs)
    if (pr.anchors == std::pair<std::string, std::string>{"eA", "eC"}) {
      found = true;
      CHECK(pr.indirect.sentence_indices == std::vector<int>{0, 1});
    }
  CHECK(found);
}

TEST_CASE("direct sentence takes the smallest index") {
  Paragraph p = annotated_paragraph(
      {"Alice met Carol .", "Alice met Bob .", "Bob met Carol .", "Alice met Carol again ."},
      kAbc);
  auto pairs = miner::mine_pairs(p);
  for (const auto& pr : pairs)
    if (pr.anchors == std::pair<std::string, std::string>{"eA", "eC"})
      CHECK(pr.direct.sentence_indices == std::vector<int>{0});
}

TEST_CASE("equal-hop chains resolve to the smallest sentence sequence") {
  Paragraph p = annotated_paragraph({"Alice met Bob .", "Bob met Carol .", "Alice met Dave .",
                                     "Dave met Carol .", "Alice met Carol ."},
                                    kAbc);
  auto pairs = miner::mine_pairs(p);
  for (const auto& pr : pairs)
    if (pr.anchors == std::pair<std::string, std::string>{"eA", "eC"}) {
      CHECK(pr.indirect.entity_chain.size() == 3);
      // both 2-hop chains exist: eA-eB-eC uses {0,1}, eA-eD-eC uses {2,3}
      CHECK(pr.indirect.sentence_indices == std::vector<int>{0, 1});
    }
}

TEST_CASE("raising the hop limit only adds pairs") {
  auto synth = corpus::gen_synthetic_corpus({.seed = 31, .n_docs = 30});
  auto narrow = miner::mine_corpus(synth.corpus, 2);
  auto wide = miner::mine_corpus(synth.corpus, 4);
  REQUIRE(narrow.size() <= wide.size());
  std::set<std::pair<std::string, std::string>> wide_keys;
  std::map<std::pair<std::string, std::string>, const LogicPair*> by_key;
  for (const auto& pr : wide) {
    wide_keys.insert({pr.doc_id + "/" + pr.para_id, pr.anchors.first + "/" + pr.anchors.second});
    by_key[{pr.doc_id + "/" + pr.para_id, pr.anchors.first + "/" + pr.anchors.second}] = &pr;
  }
  for (const auto& pr : narrow) {
    std::pair<std::string, std::string> key{pr.doc_id + "/" + pr.para_id,
                                            pr.anchors.first + "/" + pr.anchors.second};
    REQUIRE(wide_keys.count(key));
    // a pair found at l_max=2 keeps its chain at l_max=4 (shortest first)
    CHECK(by_key.at(key)->indirect == pr.indirect);
  }
}

TEST_CASE("mining matches the exhaustive reference on random paragraphs") {
  Gazetteer g;
  for (int i = 0; i < 6; ++i) {
    std::string name(1, static_cast<char>('F' + i));
    g.push_back({"e" + std::to_string(i), name + "ora", {}});
  }
  const std::vector<std::string> verbs{"met", "saw", "hired"};
  Rng rng(derive_seed(77, "miner-fuzz"));
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<std::string> sentences;
    int n_sent = 3 + static_cast<int>(rng.index(5));
    for (int s = 0; s < n_sent; ++s) {
      // two or three distinct entities per sentence
      auto picks = rng.sample_indices(g.size(), 2 + rng.index(2));
      std::string text = g[picks[0]].canonical + " " + verbs[rng.index(verbs.size())] + " " +
                         g[picks[1]].canonical;
      if (picks.size() == 3) text += " near " + g[picks[2]].canonical;
      text += " .";
      sentences.push_back(std::move(text));
    }
    Paragraph p = annotated_paragraph(sentences, g);
    for (int l_max : {2, 3, 4}) {
      auto got = miner::mine_pairs(p, l_max);
      auto want = oracle_mine(p, l_max);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) REQUIRE(got[i] == want[i]);
    }
  }
}

TEST_CASE("mined pairs equal the generator's reference enumeration") {
  auto synth = corpus::gen_synthetic_corpus({.seed = 9, .n_docs = 40});
  auto mined = miner::mine_corpus(synth.corpus);
  REQUIRE(mined.size() == synth.truth.size());
  for (std::size_t i = 0; i < mined.size(); ++i) CHECK(mined[i] == synth.truth[i]);
}

TEST_CASE("job count does not change mining output") {
  auto synth = corpus::gen_synthetic_corpus({.seed = 13, .n_docs = 25});
  auto serial = miner::mine_corpus(synth.corpus, 4, 1);
  auto parallel = miner::mine_corpus(synth.corpus, 4, 3);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) CHECK(serial[i] == parallel[i]);
}

TEST_CASE("histogram counts indirect chain sentences") {
  auto synth = corpus::gen_synthetic_corpus({.seed = 9, .n_docs = 40});
  auto mined = miner::mine_corpus(synth.corpus);
  auto hist = miner::chain_length_histogram(mined);
  long total = 0;
  for (const auto& [len, n] : hist) {
    CHECK(len >= 2);
    total += n;
  }
  CHECK(total == static_cast<long>(mined.size()));
}

TEST_CASE("pairs file round trip rebuilds instances") {
  testutil::TempDir tmp("pairs");
  auto synth = corpus::gen_synthetic_corpus({.seed = 6, .n_docs = 10});
  auto mined = miner::mine_corpus(synth.corpus);
  miner::save_pairs(mined, tmp / "pairs.jsonl");
  auto loaded = miner::load_pairs(tmp / "pairs.jsonl", synth.corpus);
  REQUIRE(loaded.size() == mined.size());
  for (std::size_t i = 0; i < mined.size(); ++i) CHECK(loaded[i] == mined[i]);
}

TEST_CASE("hop limit below two is rejected") {
  Paragraph p = annotated_paragraph({"Alice met Bob ."}, kAbc);
  CHECK_THROWS_AS(miner::mine_pairs(p, 1), InvalidConfig);
}

}  // TEST_SUITE
