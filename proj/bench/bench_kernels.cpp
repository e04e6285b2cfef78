// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0
//
// Serial reference against the OpenMP kernels. Argument 0 runs serially,
// argument 1 in parallel.

#include <benchmark/benchmark.h>

#include <vector>

#include "vrft/experiment.hpp"
#include "vrft/grpo.hpp"
#include "vrft/metrics.hpp"
#include "vrft/sft.hpp"

namespace {

using namespace vrft;

struct Workload {
  ExperimentConfig cfg;
  DatasetSplit data;
  PolicyParams params;
  std::vector<EncodedInput> inputs;
  std::vector<SftExample> sft_batch;

  Workload() {
    auto g = cfg.data;
    g.n = 64;
    data = generate_planted_shapes(g, cfg.train_data_seed());
    params = init_policy(cfg.policy, build_vocabulary(g.width, g.height, cfg.classes()), cfg.policy_seed());
    for (const auto& s : data.samples) inputs.push_back(encode_input(params.config, s));
    for (std::size_t i = 0; i < 32; ++i)
      sft_batch.push_back({&inputs[i], gold_sequence(params, data.samples[i], cfg.classes())});
  }
};

const Workload& workload() {
  static const Workload w;
  return w;
}

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

void BM_SftGradient(benchmark::State& state) {
  const auto& w = workload();
  const auto objective = sft_objective(w.sft_batch);
  for (auto _ : state) benchmark::DoNotOptimize(grad_trainable(w.params, objective, mode(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(w.sft_batch.size()));
}

void BM_GrpoStep(benchmark::State& state) {
  const auto& w = workload();
  auto params = w.params;
  std::vector<const TaskSample*> batch;
  std::vector<const EncodedInput*> inputs;
  for (std::size_t i = 0; i < w.data.size() && batch.size() < 8; ++i) {
    if (w.data.samples[i].task == Task::vqa) continue;
    batch.push_back(&w.data.samples[i]);
    inputs.push_back(&w.inputs[i]);
  }
  Optimizer opt(w.cfg.grpo.optimizer);
  std::uint64_t stream = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(grpo_step(params, batch, inputs, w.cfg.grpo, opt, ++stream, w.cfg.classes(),
                                       w.cfg.reward, mode(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(batch.size()) * w.cfg.grpo.group_size);
}

void BM_Evaluate(benchmark::State& state) {
  const auto& w = workload();
  for (auto _ : state)
    benchmark::DoNotOptimize(evaluate(w.params, w.data, w.cfg.classes(), w.cfg.eval, mode(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(w.data.size()));
}

}  // namespace

BENCHMARK(BM_SftGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GrpoStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Evaluate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
