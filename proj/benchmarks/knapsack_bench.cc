#include <vector>

#include <benchmark/benchmark.h>

#include "fbcrs/instances.h"
#include "fbcrs/knapsack.h"

namespace fbcrs {
namespace {

KnapsackInstance uniform(std::size_t n) {
  const double size = 1.0 / static_cast<double>(n);
  return KnapsackInstance(std::vector<SizeLaw>(n, SizeLaw::bernoulli(size, 1.0)));
}

// Two size atoms per element off the rational grid, so fill laws grow.
KnapsackInstance two_atom(std::size_t n) {
  const double m = 0.9 / static_cast<double>(n);
  std::vector<SizeLaw> laws;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 0.05 + 0.013 * static_cast<double>(i % 7);
    laws.emplace_back(std::vector<Atom>{{a, m}, {a + 0.2, m}}, 1.0 - 2.0 * m);
  }
  return KnapsackInstance(std::move(laws));
}

void BM_KnapsackExactUniform(benchmark::State& state) {
  const KnapsackInstance inst = uniform(static_cast<std::size_t>(state.range(0)));
  const KnapsackPlan plan = closed_form_knapsack_plan(inst);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_knapsack_exact(inst, plan).max_deviation(plan));
  }
}
BENCHMARK(BM_KnapsackExactUniform)->Arg(10)->Arg(50)->Arg(200)->Unit(benchmark::kMicrosecond);

void BM_KnapsackExactTwoAtom(benchmark::State& state) {
  const KnapsackInstance inst = two_atom(static_cast<std::size_t>(state.range(0)));
  const KnapsackPlan plan = closed_form_knapsack_plan(inst);
  std::size_t atoms = 0;
  for (auto _ : state) {
    const KnapsackExactResult r = run_knapsack_exact(inst, plan);
    atoms = r.max_atoms;
    benchmark::DoNotOptimize(atoms);
  }
  state.counters["max_atoms"] = static_cast<double>(atoms);
}
BENCHMARK(BM_KnapsackExactTwoAtom)->Arg(6)->Arg(10)->Arg(14)->Unit(benchmark::kMillisecond);

void BM_KnapsackMc(benchmark::State& state) {
  const KnapsackInstance inst = uniform(50);
  const KnapsackPlan plan = closed_form_knapsack_plan(inst);
  const auto trials = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_knapsack_mc(inst, plan, {trials, 1, 1}).capacity_violations);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KnapsackMc)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace fbcrs
