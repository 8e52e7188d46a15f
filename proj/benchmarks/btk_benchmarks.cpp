// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>
#include <btk/feature_bank.hpp>
#include <btk/fusion_math.hpp>
#include <btk/knowledge_augmentor.hpp>
#include <btk/retrieval.hpp>
#include <btk/rng.hpp>

namespace {

void BM_CosineTopk(benchmark::State& state) {
  const auto count = static_cast<std::uint64_t>(state.range(0));
  const btk::FeatureBank bank = btk::synth_bank(1, count, 512, btk::Modality::kText);
  btk::Rng rng(2);
  std::vector<double> q(512);
  for (auto& x : q) x = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(btk::cosine_topk(std::span<const double>(q), bank, 5));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(count));
}
BENCHMARK(BM_CosineTopk)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_MhaForward(benchmark::State& state) {
  const auto d = state.range(0);
  btk::Rng rng(3);
  const btk::MhaParams p = btk::MhaParams::random(rng, d, 8, 0.1);
  const btk::Matrix q = btk::random_matrix(rng, 36, d), kv = btk::random_matrix(rng, 5, d);
  for (auto _ : state) benchmark::DoNotOptimize(btk::mha_forward(q, kv, p));
}
BENCHMARK(BM_MhaForward)->Arg(64)->Arg(512);

void BM_KaForward(benchmark::State& state) {
  const auto d = state.range(0);
  btk::Rng rng(4);
  const btk::KaParams p = btk::KaParams::random(rng, 512, d, d, 8, 0.1);
  const btk::KnowledgeContext ctx{btk::random_matrix(rng, 5, 512), btk::random_matrix(rng, 1, d)};
  for (auto _ : state) benchmark::DoNotOptimize(btk::ka_forward(ctx, p));
}
BENCHMARK(BM_KaForward)->Arg(64)->Arg(768);

}  // namespace

BENCHMARK_MAIN();
