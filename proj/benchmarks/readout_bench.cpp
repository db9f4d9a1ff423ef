#include "pelm/readout.hpp"

#include <benchmark/benchmark.h>

using namespace pelm;

static void BM_GramUpdate(benchmark::State& state) {
  const auto m = state.range(0);
  const RowMatrix h = RowMatrix::Random(2048, m);
  const Matrix t = Matrix::Random(2048, 10);
  GramAccumulator acc(m, 10);
  for (auto _ : state) acc.add(h, t);
  state.SetItemsProcessed(state.iterations() * 2048);
}
BENCHMARK(BM_GramUpdate)->Arg(400)->Arg(1600)->Unit(benchmark::kMillisecond);

static void BM_SolveRidge(benchmark::State& state) {
  const auto m = state.range(0);
  const RowMatrix h = RowMatrix::Random(2 * m, m);
  GramAccumulator acc(m, 10);
  acc.add(h, Matrix::Random(2 * m, 10));
  for (auto _ : state) benchmark::DoNotOptimize(solve_ridge(acc.hth, acc.htt, 1e-4, TargetEncoding::one_hot_pm1));
}
BENCHMARK(BM_SolveRidge)->Arg(400)->Arg(1600)->Unit(benchmark::kMillisecond);
