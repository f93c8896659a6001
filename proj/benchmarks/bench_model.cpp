#include <benchmark/benchmark.h>

#include <vector>

#include "logicforge/dataset.hpp"
#include "logicforge/model.hpp"
#include "logicforge/rng.hpp"
#include "logicforge/train.hpp"

using namespace logicforge;

namespace {

model::ModelParams bench_params(int d_model, int n_layers) {
  model::ModelConfig cfg;
  cfg.vocab_size = 128;
  cfg.d_model = d_model;
  cfg.n_layers = n_layers;
  cfg.n_heads = 4;
  cfg.context_window = 128;
  cfg.seed = 13;
  return model::init_params(cfg);
}

std::vector<int> bench_tokens(std::size_t len, std::uint64_t salt) {
  Rng rng(derive_seed(17, "bench-tokens", salt));
  std::vector<int> toks(len);
  for (auto& t : toks) t = 5 + static_cast<int>(rng.index(123));
  return toks;
}

void BM_forward(benchmark::State& state) {
  const auto params = bench_params(static_cast<int>(state.range(0)), 2);
  const auto toks = bench_tokens(64, 0);
  for (auto _ : state) {
    auto fwd = model::forward(params, toks);
    benchmark::DoNotOptimize(fwd.logits);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(toks.size()));
}
BENCHMARK(BM_forward)->Arg(32)->Arg(64)->Arg(128);

void BM_dual_loss_grads(benchmark::State& state) {
  auto params = bench_params(64, 2);
  dataset::Batch batch;
  const std::size_t rows = static_cast<std::size_t>(state.range(0));
  for (std::size_t r = 0; r < rows; ++r) {
    auto toks = bench_tokens(48, r + 1);
    std::vector<unsigned char> mask(toks.size(), 1);
    mask[0] = 0;
    batch.tokens.push_back(std::move(toks));
    batch.mask.push_back(std::move(mask));
    batch.lengths.push_back(48);
    batch.kinds.push_back(r % 2 == 0 ? dataset::Batch::RowKind::Logic
                                     : dataset::Batch::RowKind::LM);
  }
  auto grads = model::zeros_like(params);
  for (auto _ : state) {
    auto loss = train::dual_loss(params, batch, &grads);
    benchmark::DoNotOptimize(loss);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(rows));
}
BENCHMARK(BM_dual_loss_grads)->Arg(4)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
