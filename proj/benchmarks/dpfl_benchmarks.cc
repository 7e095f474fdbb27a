// Copyright 2026 The DPFL Simulator Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Microbenchmarks for the accounting, scheduling and aggregation hot paths.

#include <vector>

#include <benchmark/benchmark.h>

#include "dpfl/baselines.h"
#include "dpfl/data.h"
#include "dpfl/fl_engine.h"
#include "dpfl/models.h"
#include "dpfl/rdp_accountant.h"
#include "dpfl/sampling_opt.h"
#include "dpfl/scheduler.h"

namespace dpfl {
namespace {

void BM_SpendRecursive(benchmark::State& state) {
  const int rounds = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(SpendRecursive(12.0, rounds, rounds / 2, 0.6));
  }
  state.SetItemsProcessed(state.iterations() * rounds);
}
BENCHMARK(BM_SpendRecursive)->Arg(25)->Arg(200)->Arg(2000);

void BM_SpendClosedForm(benchmark::State& state) {
  const int rounds = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        SpendClosedForm(12.0, rounds, rounds / 2, 0.6, rounds));
  }
}
BENCHMARK(BM_SpendClosedForm)->Arg(25)->Arg(200)->Arg(2000);

PrivacySpec Spec(int clients, int rounds) {
  PrivacySpec spec;
  spec.alpha = 10.0;
  spec.client_count = clients;
  spec.rounds = rounds;
  return spec;
}

void BM_ScheduleTimeAdaptive(benchmark::State& state) {
  const int clients = static_cast<int>(state.range(0));
  const PrivacySpec spec = Spec(clients, 100);
  std::vector<double> budgets, rates;
  for (int n = 0; n < clients; ++n) {
    budgets.push_back(2.0 + n % 7);
    rates.push_back(0.2 + 0.1 * (n % 6));
  }
  const std::vector<int> transitions(clients, 50);
  TimeAdaptiveOptions options;
  options.permute_rates = state.range(1) != 0;
  options.repermute_each_round = options.permute_rates;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ScheduleTimeAdaptive(spec, budgets, rates, transitions, options));
  }
  state.SetItemsProcessed(state.iterations() * clients * spec.rounds);
}
BENCHMARK(BM_ScheduleTimeAdaptive)
    ->Args({30, 0})
    ->Args({30, 1})
    ->Args({1000, 0})
    ->Args({1000, 1});

void BM_OptimizeRatePermutation(benchmark::State& state) {
  const size_t n = static_cast<size_t>(state.range(0));
  Rng rng(1);
  std::vector<double> clips(n), rates(n);
  for (size_t i = 0; i < n; ++i) {
    clips[i] = 0.1 + rng.Uniform();
    rates[i] = 0.1 + 0.8 * rng.Uniform();
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(OptimizeRatePermutation(clips, rates, 2.0));
  }
}
BENCHMARK(BM_OptimizeRatePermutation)->Arg(8)->Arg(1000)->Arg(100000);

void BM_ClipUpdate(benchmark::State& state) {
  ModelVector v(static_cast<size_t>(state.range(0)));
  for (size_t j = 0; j < v.size(); ++j) v[j] = 0.01 * j;
  for (auto _ : state) benchmark::DoNotOptimize(ClipUpdate(v, 1.0));
  state.SetBytesProcessed(state.iterations() * v.size() * sizeof(double));
}
BENCHMARK(BM_ClipUpdate)->Arg(64)->Arg(4096)->Arg(1 << 18);

// One full round: local training, clipping, noise and aggregation.
void BM_RunRound(benchmark::State& state) {
  const size_t clients = static_cast<size_t>(state.range(0));
  const int threads = static_cast<int>(state.range(1));
  SyntheticTaskSpec task;
  task.dimension = 20;
  task.classes = 4;
  task.clients = clients;
  task.samples_per_client = 64;
  const FederatedDataset data = MakeSynthetic(task, PartitionDescriptor{});
  const auto model = MakeModel({ModelKind::kLogisticRegression, 20, 4});
  const Schedule schedule = ScheduleIdpFedAvg(
      Spec(static_cast<int>(clients), 10), std::vector<double>(clients, 5.0));
  EngineConfig engine;
  engine.local = {1, 32, 0.1};
  engine.threads = threads;
  const RngStreams streams(3);
  ServerState server{ModelVector(model->parameter_count()),
                     ModelVector(model->parameter_count())};
  for (auto _ : state) {
    benchmark::DoNotOptimize(RunRound(*model, server, schedule.rounds[0],
                                      data.shards, engine, streams, 0.1));
  }
  state.SetItemsProcessed(state.iterations() * clients);
}
BENCHMARK(BM_RunRound)->Args({30, 1})->Args({300, 1})->Args({300, 4});

}  // namespace
}  // namespace dpfl

BENCHMARK_MAIN();
