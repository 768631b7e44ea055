// Copyright 2026 The natsel Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial vs OpenMP kernels over Gaussian2D samples. Arg = sample count.

#include <benchmark/benchmark.h>

#include "natsel/bench.hpp"
#include "natsel/kernels.hpp"

namespace {

struct Data {
  natsel::Gaussian2DFamily family;
  natsel::ParamVector theta = natsel::make_problem("rastrigin").initial;
  std::vector<natsel::Hypothesis> samples;
  std::vector<double> weights;

  explicit Data(std::size_t n) {
    natsel::Rng rng(1);
    samples = family.sample(theta, rng, n);
    weights = natsel::kernels::serial::evaluate_losses(natsel::rastrigin_loss(), samples);
  }
};

template <bool Parallel>
void BM_ScoreOuter(benchmark::State& state) {
  const Data d(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto m = Parallel ? natsel::kernels::parallel::score_outer_sum(d.family, d.theta, d.samples)
                      : natsel::kernels::serial::score_outer_sum(d.family, d.theta, d.samples);
    benchmark::DoNotOptimize(m.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_WeightedScore(benchmark::State& state) {
  const Data d(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto v = Parallel
                 ? natsel::kernels::parallel::weighted_score_sum(d.family, d.theta, d.samples, d.weights)
                 : natsel::kernels::serial::weighted_score_sum(d.family, d.theta, d.samples, d.weights);
    benchmark::DoNotOptimize(v.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_Losses(benchmark::State& state) {
  const Data d(static_cast<std::size_t>(state.range(0)));
  const natsel::LossOracle loss = natsel::rastrigin_loss();
  for (auto _ : state) {
    auto v = Parallel ? natsel::kernels::parallel::evaluate_losses(loss, d.samples)
                      : natsel::kernels::serial::evaluate_losses(loss, d.samples);
    benchmark::DoNotOptimize(v.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_ScoreOuter<false>)->RangeMultiplier(8)->Range(40, 1 << 20);
BENCHMARK(BM_ScoreOuter<true>)->RangeMultiplier(8)->Range(40, 1 << 20);
BENCHMARK(BM_WeightedScore<false>)->RangeMultiplier(8)->Range(40, 1 << 20);
BENCHMARK(BM_WeightedScore<true>)->RangeMultiplier(8)->Range(40, 1 << 20);
BENCHMARK(BM_Losses<false>)->RangeMultiplier(8)->Range(40, 1 << 20);
BENCHMARK(BM_Losses<true>)->RangeMultiplier(8)->Range(40, 1 << 20);

BENCHMARK_MAIN();
