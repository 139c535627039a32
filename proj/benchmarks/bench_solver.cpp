#include <benchmark/benchmark.h>

#include <random>

#include "lmroute/mckp.hpp"
#include "lmroute/prediction.hpp"

namespace {

using namespace lmroute;

// Four options per group with prices spanning two orders of magnitude, as for
// a ladder of model sizes; values loosely increase with price.
mckp::Instance ladder(std::size_t groups, double cap_fraction, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> tokens(20, 400);
  const double price[] = {0.0004, 0.0005, 0.002, 0.02};
  const double ability[] = {0.35, 0.45, 0.6, 0.8};
  mckp::Instance inst;
  double full = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    const double difficulty = unit(rng);
    const int t = tokens(rng);
    auto& group = inst.groups.emplace_back();
    double best_cost = 0.0;
    for (int o = 0; o < 4; ++o) {
      const double p = sigmoid(6.0 * (ability[o] - difficulty) + unit(rng) - 0.5);
      group.push_back({o, price[o] * (t + 8.0) / 1000.0, p});
      best_cost = group.back().cost;
    }
    full += best_cost;
  }
  inst.direction = mckp::MaxValueUnderCostCap{full * cap_fraction};
  return inst;
}

void BM_SolveCostCap(benchmark::State& state) {
  const auto inst = ladder(static_cast<std::size_t>(state.range(0)), 0.3, 1);
  for (auto _ : state) benchmark::DoNotOptimize(mckp::solve(inst));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveCostCap)->RangeMultiplier(4)->Range(16, 1024)->Unit(benchmark::kMicrosecond);

void BM_SolveValueFloor(benchmark::State& state) {
  auto inst = ladder(static_cast<std::size_t>(state.range(0)), 1.0, 2);
  double best = 0.0;
  for (const auto& g : inst.groups) best += g.back().value;
  inst.direction = mckp::MinCostOverValueFloor{0.6 * best};
  for (auto _ : state) benchmark::DoNotOptimize(mckp::solve(inst));
}
BENCHMARK(BM_SolveValueFloor)->RangeMultiplier(4)->Range(16, 1024)->Unit(benchmark::kMicrosecond);

void BM_RootBound(benchmark::State& state) {
  const auto inst = ladder(static_cast<std::size_t>(state.range(0)), 0.3, 3);
  for (auto _ : state) benchmark::DoNotOptimize(mckp::lp_bound(inst, {}));
}
BENCHMARK(BM_RootBound)->Arg(200)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
