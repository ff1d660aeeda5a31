// OpenMP kernels against their serial references.

#include <benchmark/benchmark.h>

#include "hindpaint/env.hpp"
#include "hindpaint/kernels.hpp"
#include "hindpaint/network.hpp"
#include "hindpaint/rng.hpp"

using namespace hindpaint;

namespace {

std::vector<float> noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(uniform01(rng));
  return v;
}

void BM_SumSquaredDiff_OpenMP(benchmark::State& state) {
  const auto a = noise(state.range(0), 1);
  const auto b = noise(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::sum_squared_diff(a, b));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SumSquaredDiff_Serial(benchmark::State& state) {
  const auto a = noise(state.range(0), 1);
  const auto b = noise(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::sum_squared_diff(a, b));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

// Gradient accumulation of a compact network over a batch of inputs.
struct GradFixture {
  ConvNet net{NetArch::compact(16), 6};
  std::vector<std::vector<float>> inputs;
  std::vector<double> grad;
  explicit GradFixture(std::size_t n) {
    net.init(1);
    for (std::size_t i = 0; i < n; ++i) inputs.push_back(noise(net.input_size(), i));
    grad.assign(net.num_params(), 0.0);
  }
  auto make() const {
    return [] { return ConvNet::Cache{}; };
  }
  auto item() const {
    return [this](std::size_t i, std::span<double> g, ConvNet::Cache& cache) {
      const auto out = net.forward(inputs[i], cache);
      std::vector<double> d(out.begin(), out.end());
      net.backward(cache, d, g);
    };
  }
};

void BM_BatchGradient_OpenMP(benchmark::State& state) {
  GradFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    kernels::parallel_accumulate(f.inputs.size(), f.grad, f.make(), f.item());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchGradient_Serial(benchmark::State& state) {
  GradFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    kernels::reference::accumulate(f.inputs.size(), f.grad, f.make(), f.item());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

std::vector<PaintEnv> make_envs(std::size_t n) {
  EnvConfig cfg;
  cfg.patch = {8, 8};
  cfg.max_radius = 3;
  std::vector<PaintEnv> envs;
  for (std::size_t i = 0; i < n; ++i) {
    cfg.seed = i;
    envs.emplace_back(cfg, random_canvas(48, 48, 1000 + i), StartSpec::blank());
  }
  return envs;
}

void BM_VecRollout_OpenMP(benchmark::State& state) {
  const RandomPolicy policy;
  const auto envs = make_envs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto copy = envs;
    benchmark::DoNotOptimize(vec_rollout(policy, copy));
  }
}

void BM_VecRollout_Serial(benchmark::State& state) {
  const RandomPolicy policy;
  const auto envs = make_envs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto copy = envs;
    std::vector<Episode> eps;
    for (auto& e : copy) eps.push_back(rollout(policy, e));
    benchmark::DoNotOptimize(eps);
  }
}

}  // namespace

BENCHMARK(BM_SumSquaredDiff_OpenMP)->Arg(1 << 12)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_SumSquaredDiff_Serial)->Arg(1 << 12)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_BatchGradient_OpenMP)->Arg(64)->Arg(256);
BENCHMARK(BM_BatchGradient_Serial)->Arg(64)->Arg(256);
BENCHMARK(BM_VecRollout_OpenMP)->Arg(16);
BENCHMARK(BM_VecRollout_Serial)->Arg(16);

BENCHMARK_MAIN();
