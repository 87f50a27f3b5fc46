// Copyright 2026 The cgap Authors.
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "cgap/accounting.hpp"
#include "cgap/growth.hpp"
#include "cgap/network.hpp"
#include "cgap/ops.hpp"
#include "cgap/scheduler.hpp"

namespace {

using namespace cgap;

Tensor filled(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (float& v : t.data()) v = static_cast<float>(rng.uniform(-1.0f, 1.0f));
  return t;
}

// Args: batch, in channels, out channels, spatial size.
void BM_Conv2dForward(benchmark::State& state) {
  Rng rng(1);
  const auto b = static_cast<std::size_t>(state.range(0)), i = static_cast<std::size_t>(state.range(1)),
             o = static_cast<std::size_t>(state.range(2)), s = static_cast<std::size_t>(state.range(3));
  const Tensor x = filled({b, i, s, s}, rng), w = filled({o, i, 5, 5}, rng), bias = filled({o}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w, bias));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * b));
}
BENCHMARK(BM_Conv2dForward)->Args({64, 1, 20, 28})->Args({64, 20, 50, 12})->Args({64, 4, 10, 12});

void BM_LinearForward(benchmark::State& state) {
  Rng rng(2);
  const auto b = static_cast<std::size_t>(state.range(0)), i = static_cast<std::size_t>(state.range(1)),
             o = static_cast<std::size_t>(state.range(2));
  const Tensor x = filled({b, i}, rng), w = filled({o, i}, rng), bias = filled({o}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(linear(x, w, bias));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * b));
}
BENCHMARK(BM_LinearForward)->Args({64, 800, 500})->Args({64, 500, 10});

// One SGD step of LeNet-5 at the given widths; range(0) picks baseline (1) or seed (0).
void BM_LeNetStep(benchmark::State& state) {
  Rng rng(3);
  ModelConfig m;
  const Architecture arch = state.range(0) ? m.baseline_architecture({}, 10) : m.seed_architecture({}, 10);
  Network net = build_network(arch);
  init_parameters(net, rng);
  const Tensor x = filled({64, 1, 28, 28}, rng);
  std::vector<std::int32_t> labels(64);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::int32_t>(i % 10);
  for (auto _ : state) {
    Tensor logits = net.forward(x);
    softmax_cross_entropy_backward(logits, labels);
    net.backward(logits.take_grad());
    sgd_step(net, 0.01f, 0.9f, 5e-4f);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 64));
  state.counters["params"] = static_cast<double>(param_count(net));
}
BENCHMARK(BM_LeNetStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

// Growth sweep on the seed network with an all-ones saliency table.
void BM_GrowthSweep(benchmark::State& state) {
  ModelConfig m;
  GrowthConfig g;
  for (auto _ : state) {
    state.PauseTiming();
    Rng rng(4);
    Network net = build_network(m.seed_architecture({}, 10));
    init_parameters(net, rng);
    SaliencyTable table;
    table.reset(net);
    for (const std::size_t l : net.param_layers()) {
      const std::vector<float> ones(net.layer(l).weights.size(), 1.0f);
      table.accumulate(l, ones, ones);
    }
    state.ResumeTiming();
    grow_network(net, table, g, rng, SourceSelection::Saliency, 1);
    benchmark::DoNotOptimize(net.widths());
  }
}
BENCHMARK(BM_GrowthSweep)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
