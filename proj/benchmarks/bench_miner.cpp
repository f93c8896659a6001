#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "logicforge/corpus.hpp"
#include "logicforge/gen.hpp"
#include "logicforge/miner.hpp"
#include "logicforge/rng.hpp"

using namespace logicforge;

namespace {

// one dense paragraph: `entities` names, `sentences` sentences, 2 mentions each
corpus::Paragraph dense_paragraph(std::size_t entities, int sentences) {
  corpus::Gazetteer g;
  for (std::size_t i = 0; i < entities; ++i)
    g.push_back({"e" + std::to_string(i), "Entity" + std::to_string(i), {}});
  Rng rng(derive_seed(7, "bench-paragraph", sentences));
  std::string text;
  std::vector<corpus::Sentence> sents;
  for (int s = 0; s < sentences; ++s) {
    const auto pick = rng.sample_indices(entities, 2);
    std::string st = g[pick[0]].canonical + " met " + g[pick[1]].canonical + " .";
    corpus::Sentence sent;
    sent.index = s;
    sent.char_offset = text.size();
    sent.text = st;
    sents.push_back(sent);
    if (s + 1 < sentences) st += " ";
    text += st;
  }
  corpus::Paragraph p;
  p.doc_id = "bench";
  p.para_id = "p0";
  p.text = std::move(text);
  p.sentences = std::move(sents);
  corpus::annotate_mentions(p, g);
  return p;
}

void BM_mine_paragraph(benchmark::State& state) {
  const auto p = dense_paragraph(static_cast<std::size_t>(state.range(0)),
                                 static_cast<int>(state.range(1)));
  for (auto _ : state) {
    auto pairs = miner::mine_pairs(p, 4);
    benchmark::DoNotOptimize(pairs);
  }
}
BENCHMARK(BM_mine_paragraph)->Args({5, 7})->Args({8, 10})->Args({12, 16});

void BM_mine_corpus(benchmark::State& state) {
  const auto synth = corpus::gen_synthetic_corpus(
      {.seed = 11, .n_docs = static_cast<int>(state.range(0))});
  for (auto _ : state) {
    auto pairs = miner::mine_corpus(synth.corpus);
    benchmark::DoNotOptimize(pairs);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_mine_corpus)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
