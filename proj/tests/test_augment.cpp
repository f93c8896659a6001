#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "logicforge/augment.hpp"
#include "logicforge/corpus.hpp"
#include "logicforge/errors.hpp"
#include "logicforge/gen.hpp"
#include "logicforge/miner.hpp"
#include "logicforge/rng.hpp"
#include "temp_dir.hpp"

using namespace logicforge;
using augment::AugmentedPair;
using augment::MixedPair;
using corpus::Gazetteer;
using corpus::Paragraph;
using miner::LogicPair;

namespace {

Paragraph annotated_paragraph(const std::string& doc_id,
                              const std::vector<std::string>& sentences, const Gazetteer& g) {
  Paragraph p;
  p.doc_id = doc_id;
  p.para_id = "p0";
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    corpus::Sentence s;
    s.index = static_cast<int>(i);
    s.char_offset = p.text.size();
    s.text = sentences[i];
    p.text += sentences[i];
    if (i + 1 < sentences.size()) p.text += " ";
    p.sentences.push_back(std::move(s));
  }
  p.mentions = corpus::annotate_mentions(p, g);
  return p;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const Gazetteer kGaz{{"eA", "Arden", {}},   {"eB", "Brook", {}},  {"eC", "Corin", {}},
                     {"eX", "Xenia", {}},   {"eY", "Yusuf", {}},  {"eZ", "Zelda", {}},
                     {"eW", "Wendel", {}}};

// triangle paragraph over Arden/Brook/Corin
Paragraph triangle() {
  return annotated_paragraph(
      "doc-tri", {"Arden met Brook .", "Brook met Corin .", "Arden met Corin ."}, kGaz);
}

// donor paragraph over Xenia/Yusuf/Zelda/Wendel; verbs differ from the
// triangle's so spliced negatives can never collide with real sentences
Paragraph donor() {
  return annotated_paragraph(
      "doc-don", {"Xenia saw Yusuf .", "Zelda hired Wendel .", "Xenia praised Zelda ."}, kGaz);
}

LogicPair pick_pair(const std::vector<LogicPair>& pairs, const std::string& a,
                    const std::string& b) {
  for (const auto& p : pairs)
    if (p.anchors == std::pair<std::string, std::string>{a, b}) return p;
  REQUIRE(false);
  return {};
}

}  // namespace

TEST_SUITE("augment") {

TEST_CASE("counterfactual rewrite touches only mention spans") {
  Paragraph tri = triangle();
  auto pairs = miner::mine_pairs(tri);
  LogicPair pair = pick_pair(pairs, "eA", "eC");

  augment::CounterfactualMap map{{"eA", {"eX", "Xenia"}},
                                 {"eB", {"eY", "Yusuf"}},
                                 {"eC", {"eZ", "Zelda"}}};
  AugmentedPair aug = augment::apply_counterfactual_map(pair, map);
  CHECK(aug.direct.text == "Xenia met Zelda .");
  CHECK(aug.indirect.text == "Xenia met Yusuf . Yusuf met Zelda .");
  // mention ids keep the original entities; only surfaces moved
  REQUIRE(aug.direct.mentions.size() == 2);
  CHECK(aug.direct.mentions[0].entity_id == "eA");
  CHECK(aug.direct.text.substr(aug.direct.mentions[0].start,
                               aug.direct.mentions[0].end - aug.direct.mentions[0].start) ==
        "Xenia");
  CHECK(aug.direct.mentions[1].entity_id == "eC");
  // topology untouched
  CHECK(aug.direct.sentence_indices == pair.direct.sentence_indices);
  CHECK(aug.indirect.entity_chain == pair.indirect.entity_chain);
}

TEST_CASE("longer and shorter donor surfaces keep offsets consistent") {
  Paragraph tri = triangle();
  auto pairs = miner::mine_pairs(tri);
  LogicPair pair = pick_pair(pairs, "eA", "eC");
  augment::CounterfactualMap map{{"eA", {"eW", "Wendel"}},   // 5 -> 6 bytes
                                 {"eB", {"eX", "Xenia"}},
                                 {"eC", {"eY", "Yusuf"}}};
  AugmentedPair aug = augment::apply_counterfactual_map(pair, map);
  CHECK(aug.indirect.text == "Wendel met Xenia . Xenia met Yusuf .");
  for (const auto& m : aug.indirect.mentions) {
    std::string surface = aug.indirect.text.substr(m.start, m.end - m.start);
    if (m.entity_id == "eA") CHECK(surface == "Wendel");
    if (m.entity_id == "eB") CHECK(surface == "Xenia");
    if (m.entity_id == "eC") CHECK(surface == "Yusuf");
  }
}

TEST_CASE("a surface embedded in a longer word is not rewritten") {
  Gazetteer g{{"eA", "Nor", {}}, {"eB", "Brook", {}}, {"eC", "Corin", {}}};
  // "Norland" contains "Nor" but is one word, so only the real mentions move.
  Paragraph p = annotated_paragraph(
      "doc-emb", {"Nor met Brook in Norland .", "Brook met Corin .", "Nor met Corin ."}, g);
  auto pairs = miner::mine_pairs(p);
  LogicPair pair = pick_pair(pairs, "eA", "eC");
  augment::CounterfactualMap map{{"eA", {"eX", "Xenia"}},
                                 {"eB", {"eY", "Yusuf"}},
                                 {"eC", {"eZ", "Zelda"}}};
  AugmentedPair aug = augment::apply_counterfactual_map(pair, map);
  CHECK(aug.direct.text == "Xenia met Zelda .");
  CHECK(aug.indirect.text == "Xenia met Yusuf in Norland . Yusuf met Zelda .");
}

TEST_CASE("inversion restores the base texts byte for byte") {
  Paragraph tri = triangle();
  Paragraph don = donor();
  auto pairs = miner::mine_pairs(tri);
  LogicPair pair = pick_pair(pairs, "eA", "eC");
  AugmentedPair aug = augment::counterfactualize(pair, don, kGaz, 99);
  CHECK(aug.direct.text != pair.direct.text);
  auto [direct_text, indirect_text] = augment::invert_counterfactual(aug);
  CHECK(direct_text == pair.direct.text);
  CHECK(indirect_text == pair.indirect.text);
}

TEST_CASE("the sampled map avoids chain entities and stays injective") {
  Paragraph tri = triangle();
  Paragraph don = donor();
  auto pairs = miner::mine_pairs(tri);
  LogicPair pair = pick_pair(pairs, "eA", "eC");
  Rng rng(derive_seed(5, "cf-map"));
  auto map = augment::sample_counterfactual_map(pair, don, kGaz, rng);
  REQUIRE(map.size() == 3);  // eA, eB, eC
  std::set<std::string> donors;
  for (const auto& [orig, repl] : map) {
    CHECK((orig == "eA" || orig == "eB" || orig == "eC"));
    CHECK((repl.entity_id != "eA" && repl.entity_id != "eB" && repl.entity_id != "eC"));
    donors.insert(repl.entity_id);
  }
  CHECK(donors.size() == 3);
}

TEST_CASE("donor from the same document is rejected") {
  Paragraph tri = triangle();
  auto pairs = miner::mine_pairs(tri);
  LogicPair pair = pick_pair(pairs, "eA", "eC");
  Rng rng(1);
  CHECK_THROWS_AS(augment::sample_counterfactual_map(pair, tri, kGaz, rng), SameDocument);
}

TEST_CASE("a donor with too few outside entities is rejected") {
  Paragraph tri = triangle();
  Paragraph tiny = annotated_paragraph("doc-tiny", {"Xenia met Yusuf ."}, kGaz);
  auto pairs = miner::mine_pairs(tri);
  LogicPair pair = pick_pair(pairs, "eA", "eC");  // needs 3 donors
  Rng rng(1);
  CHECK_THROWS_AS(augment::sample_counterfactual_map(pair, tiny, kGaz, rng), DonorTooSmall);
}

TEST_CASE("mix produces one plus cf_ratio rows per pair") {
  auto synth = corpus::gen_synthetic_corpus({.seed = 8, .n_docs = 20});
  auto pairs = miner::mine_corpus(synth.corpus);
  REQUIRE(pairs.size() > 10);
  auto mixed = augment::mix(pairs, synth.corpus, synth.gazetteer, 3, 42);
  CHECK(mixed.size() == pairs.size() * 4);

  std::size_t n_cf = 0;
  for (const auto& m : mixed)
    if (augment::is_counterfactual(m)) ++n_cf;
  CHECK(n_cf == pairs.size() * 3);

  auto same = augment::mix(pairs, synth.corpus, synth.gazetteer, 3, 42);
  REQUIRE(same.size() == mixed.size());
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    CHECK(augment::direct_of(same[i]).text == augment::direct_of(mixed[i]).text);
    CHECK(augment::indirect_of(same[i]).text == augment::indirect_of(mixed[i]).text);
  }

  auto other = augment::mix(pairs, synth.corpus, synth.gazetteer, 3, 43);
  bool differs = false;
  for (std::size_t i = 0; i < mixed.size(); ++i)
    if (augment::direct_of(other[i]).text != augment::direct_of(mixed[i]).text) differs = true;
  CHECK(differs);
}

TEST_CASE("mix with ratio zero passes pairs through") {
  auto synth = corpus::gen_synthetic_corpus({.seed = 8, .n_docs = 5});
  auto pairs = miner::mine_corpus(synth.corpus);
  auto mixed = augment::mix(pairs, synth.corpus, synth.gazetteer, 0, 1);
  REQUIRE(mixed.size() == pairs.size());
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    CHECK_FALSE(augment::is_counterfactual(mixed[i]));
    CHECK(augment::base_of(mixed[i]) == pairs[i]);
  }
}

TEST_CASE("mix output is independent of the job count") {
  auto synth = corpus::gen_synthetic_corpus({.seed = 14, .n_docs = 16});
  auto pairs = miner::mine_corpus(synth.corpus);
  testutil::TempDir tmp("mixjobs");
  augment::save_mixed(augment::mix(pairs, synth.corpus, synth.gazetteer, 2, 7, 1), tmp / "a");
  augment::save_mixed(augment::mix(pairs, synth.corpus, synth.gazetteer, 2, 7, 3), tmp / "b");
  CHECK(slurp(tmp / "a") == slurp(tmp / "b"));
}

TEST_CASE("negative pool keeps only sentences with two distinct entities") {
  Paragraph p = annotated_paragraph(
      "doc-pool", {"Arden met Brook .", "Arden slept .", "The hall was cold .",
                   "Arden met Arden ."},  // repeated entity does not count twice
      kGaz);
  auto pool = augment::build_negative_pool({p});
  REQUIRE(pool.size() == 1);
  CHECK(pool[0].sentence_index == 0);
  CHECK(pool[0].text == "Arden met Brook .");
  REQUIRE(pool[0].mentions.size() == 2);
  CHECK(pool[0].mentions[0].start < pool[0].mentions[1].start);
}

TEST_CASE("negatives splice the anchors into a foreign sentence") {
  Paragraph tri = triangle();
  Paragraph don = donor();
  auto pairs = miner::mine_pairs(tri);
  LogicPair pair = pick_pair(pairs, "eA", "eC");
  auto pool = augment::build_negative_pool({don});
  REQUIRE(pool.size() == 3);
  Rng rng(derive_seed(3, "neg"));
  auto neg = augment::synthesize_negative(pair, pool, rng);
  CHECK(neg.is_negative);
  CHECK(neg.kind == miner::RelationInstance::Kind::Direct);
  CHECK(neg.entity_chain == std::vector<std::string>{"eA", "eC"});
  // first two distinct mentions now carry the anchors' surfaces
  bool has_arden = neg.text.find("Arden") != std::string::npos;
  bool has_corin = neg.text.find("Corin") != std::string::npos;
  CHECK(has_arden);
  CHECK(has_corin);
  CHECK(neg.text != pair.direct.text);
  // offsets still line up
  for (const auto& m : neg.mentions) {
    CHECK(m.end <= neg.text.size());
    CHECK(m.start < m.end);
  }
}

TEST_CASE("negatives come from other paragraphs only") {
  Paragraph tri = triangle();
  auto pairs = miner::mine_pairs(tri);
  LogicPair pair = pick_pair(pairs, "eA", "eC");
  auto own_pool = augment::build_negative_pool({tri});
  Rng rng(1);
  CHECK_THROWS_AS(augment::synthesize_negative(pair, own_pool, rng), EmptyPool);
}

TEST_CASE("mixed file round trip preserves texts and mentions") {
  testutil::TempDir tmp("mixed");
  auto synth = corpus::gen_synthetic_corpus({.seed = 19, .n_docs = 12});
  auto pairs = miner::mine_corpus(synth.corpus);
  auto mixed = augment::mix(pairs, synth.corpus, synth.gazetteer, 2, 5);
  augment::save_mixed(mixed, tmp / "mixed.jsonl");
  auto loaded = augment::load_mixed(tmp / "mixed.jsonl", synth.corpus);
  REQUIRE(loaded.size() == mixed.size());
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    CHECK(augment::is_counterfactual(loaded[i]) == augment::is_counterfactual(mixed[i]));
    CHECK(augment::direct_of(loaded[i]) == augment::direct_of(mixed[i]));
    CHECK(augment::indirect_of(loaded[i]) == augment::indirect_of(mixed[i]));
    CHECK(augment::base_of(loaded[i]) == augment::base_of(mixed[i]));
  }
}

TEST_CASE("tampered counterfactual text is rejected on load") {
  testutil::TempDir tmp("tamper");
  Paragraph tri = triangle();
  Paragraph don = donor();
  auto pairs = miner::mine_pairs(tri);
  LogicPair pair = pick_pair(pairs, "eA", "eC");
  AugmentedPair aug = augment::counterfactualize(pair, don, kGaz, 4);
  augment::save_mixed({MixedPair{aug}}, tmp / "one.jsonl");

  std::string line = slurp(tmp / "one.jsonl");
  auto at = line.find("met");
  REQUIRE(at != std::string::npos);
  line.replace(at, 3, "saw");
  std::ofstream out(tmp / "bad.jsonl");
  out << line;
  out.close();
  CHECK_THROWS_AS(augment::load_mixed(tmp / "bad.jsonl", {tri, don}), MalformedLine);
}

}  // TEST_SUITE
