#include "follmer/flow.hpp"
#include "follmer/mlp.hpp"
#include "follmer/oracle.hpp"
#include "follmer/rng.hpp"

#include <benchmark/benchmark.h>

using namespace follmer;

namespace {

void BM_PhiloxGaussian(benchmark::State& state) {
  RngStream rng(1);
  double acc = 0.0;
  for (auto _ : state) {
    acc += rng.gaussian();
  }
  benchmark::DoNotOptimize(acc);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PhiloxGaussian);

void BM_MlpForward(benchmark::State& state) {
  const auto rows = state.range(0);
  RngStream rng(2);
  const auto net = nn::Mlp::he_uniform(nn::MlpConfig::velocity(1, 1), rng);
  const Matrix x = Matrix::Random(rows, 1);
  const Matrix y = Matrix::Random(rows, 1);
  const Vector t = Vector::Constant(rows, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.forward(x, y, t));
  }
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_MlpForward)->Arg(1)->Arg(200)->Arg(1024);

void BM_OracleEuler(benchmark::State& state) {
  const auto target = oracle::DiscreteConditionalTarget::unconditional(
      oracle::AtomMixture::uniform({Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)}));
  const FlowConfig fc(0.99, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(flow::sample_batch(target, Vector(), fc, 1000, RngStream(3)));
  }
  state.SetItemsProcessed(state.iterations() * 1000 * state.range(0));
}
BENCHMARK(BM_OracleEuler)->Arg(100)->Arg(1000);

void BM_NetworkEuler(benchmark::State& state) {
  RngStream rng(4);
  const auto net = nn::Mlp::he_uniform(nn::MlpConfig::velocity(1, 1), rng);
  const flow::NetworkField field(net);
  const FlowConfig fc(0.99, 100);
  for (auto _ : state) {
    benchmark::DoNotOptimize(flow::sample_batch(field, Vector::Constant(1, 0.3), fc, 200, RngStream(5)));
  }
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_NetworkEuler);

} // namespace

BENCHMARK_MAIN();
