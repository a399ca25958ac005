#include <benchmark/benchmark.h>

#include "gla/gla.hpp"

namespace {

using namespace gla;

void BM_Recurrent(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const auto inst = make_instance(ModelKind::general(), L, d, d, 0);
  CostReport cost;
  for (auto _ : state) {
    auto trace = forward_recurrent(inst);
    cost = trace.cost;
    benchmark::DoNotOptimize(trace.out);
  }
  state.counters["flops"] = static_cast<double>(cost.flops);
}

void BM_Parallel(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const auto inst = make_instance(ModelKind::general(), L, d, d, 0, 0.99);
  CostReport cost;
  for (auto _ : state) {
    auto out = forward_parallel(inst, {}, &cost);
    benchmark::DoNotOptimize(out);
  }
  state.counters["flops"] = static_cast<double>(cost.flops);
}

void BM_Chunkwise(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const auto C = static_cast<std::size_t>(state.range(2));
  const auto policy = state.range(3) == 0 ? ChunkPolicy::materialize : ChunkPolicy::recompute;
  const auto inst = make_instance(ModelKind::general(), L, d, d, 0);
  const ChunkPlan plan(L, C);
  CostReport cost;
  for (auto _ : state) {
    auto fwd = forward_chunkwise(inst, plan, policy);
    cost = fwd.cost;
    benchmark::DoNotOptimize(fwd.out);
  }
  state.counters["flops"] = static_cast<double>(cost.flops);
  state.counters["state_traffic"] = static_cast<double>(cost.state_traffic());
}

void BM_ChunkwiseBackward(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const auto C = static_cast<std::size_t>(state.range(2));
  const auto policy = state.range(3) == 0 ? ChunkPolicy::materialize : ChunkPolicy::recompute;
  const auto inst = make_instance(ModelKind::general(), L, d, d, 0);
  const auto d_out = make_cotangent(L, d, 1);
  const ChunkPlan plan(L, C);
  CostReport cost;
  for (auto _ : state) {
    auto bwd = backward_chunkwise(inst, d_out, plan, policy);
    cost = bwd.cost;
    benchmark::DoNotOptimize(bwd.grads.dq);
  }
  state.counters["flops"] = static_cast<double>(cost.flops);
  state.counters["state_traffic"] = static_cast<double>(cost.state_traffic());
}

}  // namespace

BENCHMARK(BM_Recurrent)->Args({1024, 64})->Args({4096, 64})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Parallel)->Args({512, 64})->Args({1024, 64})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Chunkwise)
    ->ArgsProduct({{4096}, {64}, {16, 64, 256}, {0, 1}})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ChunkwiseBackward)
    ->ArgsProduct({{1024}, {32}, {64}, {0, 1}})
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
