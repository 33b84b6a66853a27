// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench

#include <random>

#include <benchmark/benchmark.h>

#include "felab/channel.hpp"
#include "felab/dataset.hpp"
#include "felab/equalizer.hpp"
#include "felab/training.hpp"

using namespace felab;

namespace {

EqualizerSpec desk_spec(int n_ch) {
  EqualizerSpec s;
  s.n_ch = n_ch;
  s.spans = 2;
  return s;
}

std::vector<ComplexVector> random_block(const EqualizerSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.03);
  std::vector<ComplexVector> b(static_cast<std::size_t>(spec.n_ch), ComplexVector(static_cast<std::size_t>(spec.n_fft)));
  for (auto& ch : b)
    for (auto& v : ch) v = {g(rng), g(rng)};
  return b;
}

Dataset simulated(const EqualizerSpec& spec) {
  TxSpec tx;
  tx.n_ch = spec.n_ch;
  TransmitOptions opt;
  opt.sim_rate = 256e9;
  opt.ssfm.step_km = 0.5;
  opt.ssfm.step_check = StepCheck::ignore;
  return simulate_dataset(tx, LinkSpec::matched(spec.spans, spec.fiber, 4.5), 2.0, 4096, 1, opt, spec.sps);
}

}  // namespace

static void BM_EqualizeBlock(benchmark::State& state) {
  const auto spec = desk_spec(static_cast<int>(state.range(0)));
  const auto bank = build_linear_stages(spec);
  const auto params = init_params(spec);
  const auto block = random_block(spec, 1);
  const std::vector<std::span<const Complex>> views(block.begin(), block.end());
  for (auto _ : state) benchmark::DoNotOptimize(equalize_block(views, params, spec, bank));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(spec.valid_length()) * spec.n_ch / spec.sps);
}
BENCHMARK(BM_EqualizeBlock)->Arg(1)->Arg(3)->Arg(9)->Unit(benchmark::kMicrosecond);

static void BM_SsfmSpan(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 0.01);
  SignalGrid field;
  field.sample_rate = 256e9;
  field.samples.resize(static_cast<std::size_t>(state.range(0)));
  for (auto& v : field.samples) v = {g(rng), g(rng)};
  FiberParams fiber;
  SsfmOptions opt;
  opt.step_km = 1.0;
  opt.step_check = StepCheck::ignore;
  for (auto _ : state) benchmark::DoNotOptimize(ssfm_propagate(field, fiber, opt));
  state.SetItemsProcessed(state.iterations() * 100);  // steps
}
BENCHMARK(BM_SsfmSpan)->Arg(1 << 14)->Arg(1 << 16)->Unit(benchmark::kMillisecond);

static void BM_ForwardBackward(benchmark::State& state) {
  const auto spec = desk_spec(3);
  const auto data = simulated(spec);
  const TrainingPipeline pipe(spec, 0.1);
  const auto params = init_params(spec);
  const std::vector<std::size_t> blocks{0, 1, 2, 3};
  for (auto _ : state) {
    const auto tape = pipe.forward(data, blocks, params);
    benchmark::DoNotOptimize(pipe.backward(tape, params));
  }
}
BENCHMARK(BM_ForwardBackward)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
