#include "pelm/features.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace pelm;

namespace {

ComplexGrid random_phase_field(int p) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  ComplexGrid f(p, p);
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = std::polar(1.0, u(rng));
  return f;
}

Pipeline mnist_like(int m) {
  Pipeline pl;
  pl.encoder.layout = GridLayout::image(28, 28, 4, 128);
  EmbeddingSpec es;
  es.rho = kPi / 2;
  es.correlation_length = 2;
  es.seed = 11;
  pl.embedding = build_embedding(es, 128);
  pl.op = TransferOperator::dft2(128);
  pl.detector.channels = ChannelLayout::centered(m, 2, 128);
  pl.i_sat = 0.05;
  return pl;
}

} // namespace

static void BM_Dft2(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const auto op = TransferOperator::dft2(p);
  const auto f = random_phase_field(p);
  for (auto _ : state) benchmark::DoNotOptimize(op.propagate(f));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Dft2)->Arg(32)->Arg(64)->Arg(128)->Arg(256);

static void BM_Gaussian(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const auto op = TransferOperator::gaussian(p, p, 3);
  const auto f = random_phase_field(p);
  for (auto _ : state) benchmark::DoNotOptimize(op.propagate(f));
}
BENCHMARK(BM_Gaussian)->Arg(16)->Arg(32);

static void BM_SampleFeatures(benchmark::State& state) {
  const auto pl = mnist_like(static_cast<int>(state.range(0)));
  std::vector<double> x(784, 0.5);
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_features(pl, x, i++));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SampleFeatures)->Arg(400)->Arg(1600)->Arg(4096);
BENCHMARK_MAIN();
