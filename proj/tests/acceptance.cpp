// Acceptance runner: exercises the full pipeline against its numbered
// guarantees and prints one PASS/FAIL line per criterion. Heavyweight state
// (the big synthetic corpus and the three trained models) is built once and
// shared by the criteria that need it.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "logicforge/augment.hpp"
#include "logicforge/corpus.hpp"
#include "logicforge/dataset.hpp"
#include "logicforge/errors.hpp"
#include "logicforge/eval.hpp"
#include "logicforge/gen.hpp"
#include "logicforge/miner.hpp"
#include "logicforge/model.hpp"
#include "logicforge/rng.hpp"
#include "logicforge/train.hpp"
#include "mining_oracle.hpp"

namespace fs = std::filesystem;
using namespace logicforge;
using Clock = std::chrono::steady_clock;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw Failure(what);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------- scratch dir

struct Scratch {
  fs::path root;
  Scratch() {
    root = fs::temp_directory_path() / ("logicforge-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
  fs::path operator/(const std::string& name) const { return root / name; }
};

Scratch& scratch() {
  static Scratch s;
  return s;
}

// ------------------------------------------------------------- shared fixture

constexpr std::uint64_t kSeed = 20260816;

struct Fixture {
  corpus::Synthetic synth;
  corpus::Corpus train_corpus, heldout_corpus;
  std::vector<miner::LogicPair> train_pairs, heldout_pairs;
  corpus::Vocab vocab;
  train::TrainInputs inputs;

  model::ModelParams params_init;
  model::ModelParams params_logic;
  model::ModelParams params_lmonly;
  model::ModelParams params_ctr;
  double seconds_logic_run = 0.0;

  std::vector<augment::PoolSentence> heldout_pool;
  eval::GapSets gap_sets;
  std::vector<eval::MCQItem> probe;  // exactly 500 items
};

train::TrainConfig fixture_config(const std::string& tag) {
  train::TrainConfig cfg;
  cfg.steps = 2000;
  cfg.batch_size = 8;
  cfg.lr = 1e-3;
  cfg.eval_every = 500;
  cfg.seed = 606;
  cfg.checkpoint_dir = (scratch() / ("ckpt-" + tag)).string();
  cfg.context_window = 128;
  cfg.d_model = 64;
  cfg.n_layers = 2;
  cfg.n_heads = 4;
  return cfg;
}

Fixture build_fixture() {
  Fixture f;
  f.synth = corpus::gen_synthetic_corpus(
      {.seed = kSeed, .n_docs = 1000, .n_entities = 5, .n_sentences = 7, .entity_pool = 60});

  // paragraph-level 80/20 split
  std::set<std::string> heldout_docs;
  for (std::size_t i = 0; i < f.synth.corpus.size(); ++i) {
    const corpus::Paragraph& p = f.synth.corpus[i];
    if (i % 5 == 0) {
      f.heldout_corpus.push_back(p);
      heldout_docs.insert(p.doc_id);
    } else {
      f.train_corpus.push_back(p);
    }
  }

  for (miner::LogicPair& p : miner::mine_corpus(f.synth.corpus)) {
    if (heldout_docs.count(p.doc_id))
      f.heldout_pairs.push_back(std::move(p));
    else
      f.train_pairs.push_back(std::move(p));
  }
  require(f.train_pairs.size() >= 2000,
          "expected at least 2000 training pairs, mined " +
              std::to_string(f.train_pairs.size()));
  require(f.heldout_pairs.size() >= 520,
          "expected at least 520 held-out pairs, mined " +
              std::to_string(f.heldout_pairs.size()));

  const std::vector<augment::MixedPair> mixed =
      augment::mix(f.train_pairs, f.synth.corpus, f.synth.gazetteer, 3, kSeed);
  f.vocab = corpus::build_vocab(f.synth.corpus);

  f.inputs.vocab_size = static_cast<int>(f.vocab.size());
  dataset::EncodeReport logic_report;
  f.inputs.logic = dataset::build_logic_dataset(mixed, f.vocab, 128, &logic_report);
  require(logic_report.dropped == 0, "logic rows were dropped at window 128");
  f.inputs.lm = dataset::build_lm_dataset(f.train_corpus, f.vocab, 128);

  const std::vector<augment::MixedPair> cand_slice(mixed.begin(), mixed.begin() + 2000);
  const auto train_pool = augment::build_negative_pool(f.train_corpus);
  f.inputs.candidates =
      train::build_candidate_sets(cand_slice, train_pool, f.vocab, 3, 128, kSeed).sets;
  require(f.inputs.candidates.size() >= 1000, "too few training candidate sets");

  model::ModelConfig mcfg{.vocab_size = f.inputs.vocab_size, .d_model = 64, .n_layers = 2,
                          .n_heads = 4, .context_window = 128, .seed = 606};
  f.params_init = model::init_params(mcfg);

  {
    const auto t0 = Clock::now();
    train::TrainConfig cfg = fixture_config("logic");
    f.params_logic = train::train_loop(cfg, f.inputs).params;
    f.seconds_logic_run = seconds_since(t0);
  }
  {
    train::TrainConfig cfg = fixture_config("lmonly");
    cfg.objective = train::Objective::LMOnly;
    f.params_lmonly = train::train_loop(cfg, f.inputs).params;
  }
  {
    train::TrainConfig cfg = fixture_config("ctr");
    cfg.objective = train::Objective::Contrastive;
    cfg.steps = 500;
    f.params_ctr = train::train_loop(cfg, f.inputs).params;
  }

  f.heldout_pool = augment::build_negative_pool(f.heldout_corpus);
  f.gap_sets = eval::build_gap_sets(f.heldout_pairs, f.heldout_pool, f.vocab, 128, kSeed);
  require(f.gap_sets.consistent.size() >= 1000, "too few held-out consistent examples");
  require(f.gap_sets.inconsistent.size() >= 1000, "too few held-out inconsistent examples");

  f.probe = eval::build_probe_benchmark(f.heldout_pairs, f.synth.gazetteer, 3, kSeed);
  require(f.probe.size() >= 500,
          "probe produced " + std::to_string(f.probe.size()) + " items, need 500");
  f.probe.resize(500);
  return f;
}

Fixture& fixture() {
  static Fixture f = build_fixture();
  return f;
}

// ------------------------------------------------------------------ criteria

// 1. mining equals the exhaustive reference on random paragraphs
std::string criterion_miner_oracle() {
  corpus::Gazetteer g;
  const char* names[8] = {"Avila", "Brook", "Cedar", "Delta", "Ember", "Frost", "Grove", "Haven"};
  for (int i = 0; i < 8; ++i) g.push_back({"e" + std::to_string(i), names[i], {}});
  const std::vector<std::string> verbs{"met", "saw", "hired", "praised"};

  const auto t0 = Clock::now();
  Rng rng(derive_seed(814, "acceptance-miner"));
  long pairs_checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n_entities = 3 + rng.index(6);  // 3..8
    const int n_sentences = 3 + static_cast<int>(rng.index(8));  // 3..10
    std::vector<std::string> sentences;
    for (int s = 0; s < n_sentences; ++s) {
      auto picks = rng.sample_indices(n_entities, 2 + rng.index(2));
      std::string text = g[picks[0]].canonical + " " + verbs[rng.index(verbs.size())] + " " +
                         g[picks[1]].canonical;
      if (picks.size() == 3) text += " near " + g[picks[2]].canonical;
      text += " .";
      sentences.push_back(std::move(text));
    }
    const corpus::Paragraph p =
        testutil::annotated_paragraph(sentences, g, "doc" + std::to_string(trial), "p0");
    const auto got = miner::mine_pairs(p, 4);
    const auto want = testutil::oracle_mine(p, 4);
    require(got.size() == want.size(),
            "trial " + std::to_string(trial) + ": mined " + std::to_string(got.size()) +
                " pairs, reference found " + std::to_string(want.size()));
    for (std::size_t i = 0; i < got.size(); ++i)
      require(got[i] == want[i], "trial " + std::to_string(trial) + ": pair " +
                                     std::to_string(i) + " differs from the reference");
    pairs_checked += static_cast<long>(got.size());
  }
  const double elapsed = seconds_since(t0);
  require(elapsed < 5.0, "took " + fmt(elapsed) + "s, budget is 5s");
  return std::to_string(pairs_checked) + " pairs over 200 paragraphs in " + fmt(elapsed) + "s";
}

// 2. mixing arithmetic at ratio 3 and ratio 0
std::string criterion_ratio_arithmetic() {
  corpus::Synthetic synth = corpus::gen_synthetic_corpus({.seed = 2601, .n_docs = 80});
  std::vector<miner::LogicPair> pairs = miner::mine_corpus(synth.corpus);
  require(pairs.size() >= 200, "need 200 pairs, mined " + std::to_string(pairs.size()));
  pairs.resize(200);

  const auto mixed = augment::mix(pairs, synth.corpus, synth.gazetteer, 3, 5150);
  require(mixed.size() == 800, "ratio 3 produced " + std::to_string(mixed.size()) + " examples");
  long cf = 0;
  for (const auto& m : mixed)
    if (augment::is_counterfactual(m)) ++cf;
  require(cf == 600, "ratio 3 flagged " + std::to_string(cf) + " counterfactuals, want 600");

  const auto plain = augment::mix(pairs, synth.corpus, synth.gazetteer, 0, 5150);
  require(plain.size() == pairs.size(), "ratio 0 changed the example count");
  for (std::size_t i = 0; i < plain.size(); ++i) {
    require(!augment::is_counterfactual(plain[i]), "ratio 0 produced a counterfactual");
    require(augment::base_of(plain[i]) == pairs[i], "ratio 0 reordered or altered pairs");
  }
  return "200 pairs -> 800 at ratio 3 (600 counterfactual); ratio 0 is the identity";
}

// 3. the worked replacement example, byte for byte, plus round-trip inversion
std::string criterion_counterfactual_fidelity() {
  const std::string direct_text =
      "In 1644 Everdingen travelled to Norway and Sweden, a trip that was to have profound "
      "consequences on his art.";
  const std::string indirect_text =
      "In the manner of Frans Post, Everdingen took advantage of this mishap by making "
      "sketches of the Norwegian landscape, which would have seemed very exotic to his Dutch "
      "countrymen. His annotated drawings document visits to the south - east Norwegian coast "
      "and to Bohusland and the Göteborg area in western Sweden.";

  auto mention = [](const std::string& text, const std::string& surface, std::size_t from,
                    const std::string& id) {
    const std::size_t at = text.find(surface, from);
    require(at != std::string::npos, "surface not found: " + surface);
    return miner::TextMention{id, at, at + surface.size()};
  };

  miner::LogicPair pair;
  pair.doc_id = "doc-painter";
  pair.para_id = "p0";
  pair.anchors = {"e1", "e2"};
  pair.direct.kind = miner::RelationInstance::Kind::Direct;
  pair.direct.entity_chain = {"e1", "e2"};
  pair.direct.sentence_indices = {2};
  pair.direct.text = direct_text;
  pair.direct.mentions = {mention(direct_text, "Everdingen", 0, "e1"),
                          mention(direct_text, "Sweden", 0, "e2")};
  pair.indirect.kind = miner::RelationInstance::Kind::Indirect;
  pair.indirect.entity_chain = {"e1", "e3", "e2"};
  pair.indirect.sentence_indices = {0, 1};
  pair.indirect.text = indirect_text;
  const std::size_t first_nor = indirect_text.find("Norwegian");
  pair.indirect.mentions = {mention(indirect_text, "Everdingen", 0, "e1"),
                            mention(indirect_text, "Norwegian", 0, "e3"),
                            mention(indirect_text, "Norwegian", first_nor + 1, "e3"),
                            mention(indirect_text, "Sweden", 0, "e2")};

  const augment::CounterfactualMap map{{"e1", {"d1", "Nicholas Roerich"}},
                                       {"e2", {"d2", "Master"}},
                                       {"e3", {"d3", "Canal del Dique"}}};
  const augment::AugmentedPair aug = augment::apply_counterfactual_map(pair, map);

  require(aug.direct.text ==
              "In 1644 Nicholas Roerich travelled to Norway and Master, a trip that was to "
              "have profound consequences on his art.",
          "rewritten direct sentence differs from the reference bytes");
  require(aug.indirect.text ==
              "In the manner of Frans Post, Nicholas Roerich took advantage of this mishap by "
              "making sketches of the Canal del Dique landscape, which would have seemed very "
              "exotic to his Dutch countrymen. His annotated drawings document visits to the "
              "south - east Canal del Dique coast and to Bohusland and the Göteborg area in "
              "western Master.",
          "rewritten indirect text differs from the reference bytes");

  const auto restored = augment::invert_counterfactual(aug);
  require(restored.first == direct_text && restored.second == indirect_text,
          "inverting the worked example did not restore the originals");

  // inversion restores the originals across 1000 random augmentations
  corpus::Synthetic synth = corpus::gen_synthetic_corpus({.seed = 303, .n_docs = 120});
  const std::vector<miner::LogicPair> pairs = miner::mine_corpus(synth.corpus);
  require(!pairs.empty(), "no pairs mined for the round-trip scan");
  Rng rng(derive_seed(909, "acceptance-invert"));
  for (int i = 0; i < 1000; ++i) {
    const miner::LogicPair& base = pairs[i % pairs.size()];
    std::optional<augment::AugmentedPair> a;
    while (!a) {
      const corpus::Paragraph& donor = synth.corpus[rng.index(synth.corpus.size())];
      if (donor.doc_id == base.doc_id) continue;
      try {
        a = augment::counterfactualize(base, donor, synth.gazetteer,
                                       derive_seed(909, "cf", i));
      } catch (const DonorTooSmall&) {
        // the donor shares too many entities with the chain; draw another
      }
    }
    const auto round = augment::invert_counterfactual(*a);
    require(round.first == base.direct.text && round.second == base.indirect.text,
            "round trip " + std::to_string(i) + " failed to restore the original texts");
  }
  return "worked example reproduced; 1000/1000 round trips restore the originals";
}

// 4. analytic gradients match central differences
std::string criterion_gradients() {
  const auto t0 = Clock::now();
  model::ModelConfig cfg{.vocab_size = 24, .d_model = 16, .n_layers = 1, .n_heads = 2,
                         .context_window = 32, .seed = 3};
  model::ModelParams params = model::init_params(cfg);

  dataset::Batch batch;
  batch.tokens = {{2, 7, 11, 4, 5, 19, 3}, {2, 9, 4, 21, 8, 3, 0}, {2, 6, 13, 17, 3, 0, 0},
                  {2, 22, 5, 3, 0, 0, 0}};
  batch.mask = {{0, 0, 0, 0, 1, 1, 1}, {0, 0, 0, 1, 1, 1, 0}, {0, 1, 1, 1, 1, 0, 0},
                {0, 1, 1, 1, 0, 0, 0}};
  batch.lengths = {7, 6, 5, 4};
  batch.kinds = {dataset::Batch::RowKind::Logic, dataset::Batch::RowKind::Logic,
                 dataset::Batch::RowKind::LM, dataset::Batch::RowKind::LM};

  train::CandidateSet set;
  set.condition = {7, 11, 5};
  set.positive = {19, 8};
  set.negatives = {{21, 6}, {13}, {22, 9, 17}};

  auto fd_check = [&](const std::string& tag, const std::function<double()>& loss,
                      model::ModelParams& grads, int probes_per_view) {
    auto views = model::param_views(params);
    auto gviews = model::param_views(grads);
    Rng pick(derive_seed(99, "acceptance-fd", std::hash<std::string>{}(tag)));
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t vi = 0; vi < views.size(); ++vi) {
      for (int probe = 0; probe < probes_per_view; ++probe) {
        const std::size_t j = probe == 0 ? 0 : pick.index(views[vi].size);
        const double orig = views[vi].data[j];
        views[vi].data[j] = orig + h;
        const double up = loss();
        views[vi].data[j] = orig - h;
        const double down = loss();
        views[vi].data[j] = orig;
        const double want = (up - down) / (2.0 * h);
        const double got = gviews[vi].data[j];
        const double rel =
            std::abs(got - want) / std::max({1.0, std::abs(want), std::abs(got)});
        worst = std::max(worst, rel);
        require(rel < 1e-4, tag + " gradient of " + views[vi].name + "[" +
                                std::to_string(j) + "]: relative error " + fmt(rel));
      }
    }
    return worst;
  };

  model::ModelParams dual_grads = model::zeros_like(params);
  train::dual_loss(params, batch, &dual_grads);
  const double worst_dual = fd_check(
      "total", [&] { return train::dual_loss(params, batch, nullptr).total(); }, dual_grads, 3);

  model::ModelParams ctr_grads = model::zeros_like(params);
  train::contrastive_loss(params, set, &ctr_grads, 1.0);
  const double worst_ctr = fd_check(
      "contrastive", [&] { return train::contrastive_loss(params, set, nullptr, 0.0); },
      ctr_grads, 3);

  const double elapsed = seconds_since(t0);
  require(elapsed < 60.0, "took " + fmt(elapsed) + "s, budget is 60s");
  return "max relative error " + fmt(std::max(worst_dual, worst_ctr)) + " in " + fmt(elapsed) +
         "s";
}

// 5. held-out NLL drop and a positive consistency gap exceeding the LM-only run
std::string criterion_training_gap() {
  Fixture& f = fixture();
  require(f.seconds_logic_run < 900.0,
          "training run took " + fmt(f.seconds_logic_run) + "s, budget is 900s");

  const eval::GapResult at_init = eval::consistency_gap(f.params_init, f.gap_sets);
  const eval::GapResult trained = eval::consistency_gap(f.params_logic, f.gap_sets);
  const eval::GapResult lmonly = eval::consistency_gap(f.params_lmonly, f.gap_sets);

  const double drop = 1.0 - trained.nll_consistent / at_init.nll_consistent;
  require(drop >= 0.30, "held-out consistent NLL dropped only " + fmt(100 * drop) + "%");
  require(trained.gap > 0.0, "trained consistency gap is not positive: " + fmt(trained.gap));
  require(trained.gap > lmonly.gap, "gap " + fmt(trained.gap) +
                                        " does not exceed the language-model-only gap " +
                                        fmt(lmonly.gap));
  return "NLL " + fmt(at_init.nll_consistent) + " -> " + fmt(trained.nll_consistent) + " (-" +
         fmt(100 * drop) + "%), gap " + fmt(trained.gap) + " vs " + fmt(lmonly.gap) +
         " lm-only, train " + fmt(f.seconds_logic_run) + "s";
}

// 6. probe accuracy lift over the LM-only baseline; untrained is at chance
std::string criterion_probe_lift() {
  Fixture& f = fixture();
  const auto dual = eval::evaluate(f.params_logic, f.vocab, f.probe, eval::PromptStyle::Reclor);
  const auto lmonly =
      eval::evaluate(f.params_lmonly, f.vocab, f.probe, eval::PromptStyle::Reclor);
  const auto untrained =
      eval::evaluate(f.params_init, f.vocab, f.probe, eval::PromptStyle::Reclor);

  require(dual.n_scored == 500, "probe items were skipped");
  require(untrained.accuracy >= 0.20 && untrained.accuracy <= 0.30,
          "untrained accuracy " + fmt(untrained.accuracy) + " is outside 25% +- 5");
  require(dual.accuracy - lmonly.accuracy >= 0.05,
          "lift is only " + fmt(100 * (dual.accuracy - lmonly.accuracy)) + " points (" +
              fmt(dual.accuracy) + " vs " + fmt(lmonly.accuracy) + ")");
  return "accuracy " + fmt(dual.accuracy) + " vs " + fmt(lmonly.accuracy) + " lm-only, " +
         fmt(untrained.accuracy) + " untrained, on 500 items";
}

// 7. the shuffle harness reports a full spread and is exactly order-free
std::string criterion_robustness() {
  Fixture& f = fixture();
  const eval::RobustnessResult r =
      eval::shuffle_robustness(f.params_logic, f.vocab, f.probe, eval::PromptStyle::Reclor, 5,
                               kSeed);
  require(r.runs.size() == 5, "expected 5 runs, got " + std::to_string(r.runs.size()));
  require(r.min_accuracy <= r.mean_accuracy && r.mean_accuracy <= r.max_accuracy,
          "spread statistics are inconsistent");
  for (double run : r.runs)
    require(run == r.runs[0], "a permutation changed accuracy: " + fmt(run) + " vs " +
                                  fmt(r.runs[0]));
  require(r.stddev == 0.0, "stddev " + fmt(r.stddev) + " is not exactly zero");
  return "5 permutations all score " + fmt(r.runs[0]) + ", spread 0";
}

// 8. contrastive scoring: exact tied-candidate cost and a trained ranking lift
std::string criterion_contrastive() {
  Fixture& f = fixture();
  train::CandidateSet tied;
  tied.condition = {5, 6, 7};
  tied.positive = {8, 9};
  tied.negatives = {{8, 9}, {8, 9}, {8, 9}};
  const double loss = train::contrastive_loss(f.params_init, tied, nullptr, 0.0);
  require(std::abs(loss - std::log(4.0)) < 1e-9,
          "tied-candidate cost " + fmt(loss) + " differs from ln 4");

  std::vector<augment::MixedPair> held(f.heldout_pairs.begin(), f.heldout_pairs.end());
  const auto sets =
      train::build_candidate_sets(held, f.heldout_pool, f.vocab, 3, 128, kSeed).sets;
  require(sets.size() >= 200, "too few held-out candidate sets");

  long top1 = 0;
  for (const auto& set : sets) {
    const double pos = train::token_score(f.params_ctr, set.condition, set.positive);
    bool best = true;
    for (const auto& neg : set.negatives)
      if (train::token_score(f.params_ctr, set.condition, neg) >= pos) {
        best = false;
        break;
      }
    if (best) ++top1;
  }
  const double rate = static_cast<double>(top1) / static_cast<double>(sets.size());
  require(rate > 0.25, "trained top-1 rate " + fmt(rate) + " does not beat chance");
  return "tied cost ln 4 exact; trained top-1 " + fmt(rate) + " over " +
         std::to_string(sets.size()) + " held-out sets";
}

// 9. the CLI pipeline is bitwise deterministic run to run
std::string criterion_cli_determinism() {
  const fs::path base = scratch() / "cli";
  fs::create_directories(base);
  const fs::path config = base / "run.toml";
  {
    std::ofstream out(config);
    out << "steps = 30\nbatch_size = 4\nlr = 0.001\neval_every = 10\ncontext_window = 128\n"
           "d_model = 32\nn_layers = 1\nn_heads = 4\nobjective = \"logic_plus_lm\"\n";
  }

  auto run_pipeline = [&](const std::string& tag) {
    const fs::path root = base / tag;
    const fs::path log = base / (tag + ".log");
    const std::string gen = root.string() + "/corpus";
    const std::string cli = LOGICFORGE_CLI_PATH;
    auto sh = [&](const std::string& args) {
      const std::string cmd = "\"" + cli + "\" " + args + " >>\"" + log.string() + "\" 2>&1";
      const int rc = std::system(cmd.c_str());
      require(rc == 0, "command failed (see " + log.string() + "): " + args);
    };
    sh("gen-corpus --out-dir " + gen + " --seed 17 --docs 40 --entities 5 --sentences 7");
    sh("mine --corpus " + gen + "/corpus.jsonl --gazetteer " + gen + "/gazetteer.json" +
       " --out-dir " + root.string() + "/mine --l-max 4");
    sh("augment --corpus " + gen + "/corpus.jsonl --gazetteer " + gen + "/gazetteer.json" +
       " --pairs " + root.string() + "/mine/pairs.jsonl --out-dir " + root.string() +
       "/aug --cf-ratio 3 --seed 17 --holdout-fraction 0.2");
    sh("build-dataset --corpus " + gen + "/corpus.jsonl --gazetteer " + gen +
       "/gazetteer.json --augmented " + root.string() + "/aug/augmented.jsonl --heldout " +
       root.string() + "/aug/heldout_pairs.jsonl --out-dir " + root.string() +
       "/data --context-window 128 --n-negatives 3 --seed 17");
    sh("train --config " + config.string() + " --logic " + root.string() +
       "/data/logic.jsonl --lm " + root.string() + "/data/lm.jsonl --vocab " + root.string() +
       "/data/vocab.json --candidates " + root.string() + "/data/candidates.jsonl --out-dir " +
       root.string() + "/run --seed 17");
    const std::string run = root.string() + "/run";
    sh("eval-probe --checkpoint " + run + "/checkpoints/final.ckpt --vocab " + root.string() +
       "/data/vocab.json --corpus " + gen + "/corpus.jsonl --gazetteer " + gen +
       "/gazetteer.json --pairs " + root.string() +
       "/aug/heldout_pairs.jsonl --out-dir " + run + " --style reclor --n-distractors 3 --seed 17");
    sh("eval-robustness --checkpoint " + run + "/checkpoints/final.ckpt --vocab " +
       root.string() + "/data/vocab.json --items " + run + "/probe_items.jsonl --out-dir " +
       run + " --style reclor --k 3 --seed 17");
    sh("eval-gap --checkpoint " + run + "/checkpoints/final.ckpt --vocab " + root.string() +
       "/data/vocab.json --corpus " + gen + "/corpus.jsonl --gazetteer " + gen +
       "/gazetteer.json --pairs " + root.string() + "/aug/heldout_pairs.jsonl --out-dir " +
       run + " --seed 17");
    sh("report --run-dir " + run);
    return root;
  };

  auto tree = [](const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (!entry.is_regular_file()) continue;
      const std::string name = entry.path().filename().string();
      if (name.rfind("manifest-", 0) == 0) continue;  // carries wall-clock timestamps
      std::ifstream in(entry.path(), std::ios::binary);
      std::ostringstream buf;
      buf << in.rdbuf();
      files[fs::relative(entry.path(), root).generic_string()] = buf.str();
    }
    return files;
  };

  const fs::path first = run_pipeline("first");
  const fs::path second = run_pipeline("second");
  const auto a = tree(first);
  const auto b = tree(second);

  for (const char* expected :
       {"corpus/corpus.jsonl", "mine/pairs.jsonl", "aug/augmented.jsonl", "data/vocab.json",
        "data/logic.jsonl", "run/metrics.csv", "run/checkpoints/final.ckpt",
        "run/probe_report.json", "run/robustness_report.json", "run/gap_report.json",
        "run/report.json"})
    require(a.count(expected) == 1, std::string("missing artifact: ") + expected);

  require(a.size() == b.size(), "runs produced different artifact counts");
  for (const auto& [path, bytes] : a) {
    const auto it = b.find(path);
    require(it != b.end(), "second run is missing " + path);
    require(it->second == bytes, "artifact differs between runs: " + path);
  }
  return std::to_string(a.size()) + " artifacts bitwise identical across two runs";
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<std::string()> body;
  };
  const std::vector<Criterion> criteria = {
      {1, "mining matches the exhaustive reference", criterion_miner_oracle},
      {2, "augmentation ratio arithmetic", criterion_ratio_arithmetic},
      {3, "counterfactual rewrite fidelity and inversion", criterion_counterfactual_fidelity},
      {4, "analytic gradients match finite differences", criterion_gradients},
      {5, "held-out NLL drop and consistency gap", criterion_training_gap},
      {6, "probe accuracy lift over the LM-only baseline", criterion_probe_lift},
      {7, "option-order robustness harness", criterion_robustness},
      {8, "contrastive cost and ranking", criterion_contrastive},
      {9, "CLI pipeline determinism", criterion_cli_determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    std::string verdict, detail;
    try {
      detail = c.body();
      verdict = "PASS";
    } catch (const std::exception& e) {
      detail = e.what();
      verdict = "FAIL";
      ++failures;
    }
    std::printf("%s  %d. %s  [%s] (%.1fs)\n", verdict.c_str(), c.id, c.name, detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  if (failures > 0) std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
