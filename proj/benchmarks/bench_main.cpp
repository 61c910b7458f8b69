#include <benchmark/benchmark.h>

#include "mdl/codelength.hpp"
#include "mdl/data_io.hpp"
#include "mdl/mlp.hpp"
#include "mdl/prequential.hpp"
#include "mdl/rng.hpp"
#include "mdl/switch.hpp"

using namespace mdl;

namespace {

LabeledDataset blobs(std::size_t n, std::size_t d, int k) {
  SyntheticSpec s;
  s.n = n;
  s.input_dim = d;
  s.num_classes = k;
  s.seed = 1;
  return generate(s).data;
}

// One minibatch of 32 MNIST-sized inputs through the 784-256-256-10 network.
void BM_MlpForwardBackward(benchmark::State& state) {
  const auto data = blobs(32, 784, 10);
  const Mlp net(MlpSpec::mlp(784, {256, 256}, 10));
  std::vector<double> grad(net.num_params());
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.loss_and_gradient(data.inputs(), data.labels(), grad));
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_MlpForwardBackward);

void BM_MlpForward(benchmark::State& state) {
  const auto data = blobs(256, 784, 10);
  const Mlp net(MlpSpec::mlp(784, {256, 256}, 10));
  for (auto _ : state) benchmark::DoNotOptimize(net.log2_probs(data.inputs()));
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_MlpForward);

void BM_LogLossBits(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto data = blobs(n, 20, 10);
  const Mlp net(MlpSpec::linear(20, 10));
  for (auto _ : state) benchmark::DoNotOptimize(log_loss_bits(net, data));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogLossBits)->Arg(1000)->Arg(60000);

// Exact switch search over models x blocks.
void BM_OptimalSwitch(benchmark::State& state) {
  const auto models = state.range(0);
  const auto blocks = state.range(1);
  Rng rng(3);
  Matrix bits(models, blocks);
  for (Eigen::Index i = 0; i < bits.rows(); ++i) {
    for (Eigen::Index j = 0; j < bits.cols(); ++j) bits(i, j) = rng.uniform(0.0, 100.0);
  }
  const auto prior = SwitchPrior::standard(static_cast<std::size_t>(blocks), static_cast<std::size_t>(models));
  for (auto _ : state) benchmark::DoNotOptimize(optimal_switch(bits, prior));
}
BENCHMARK(BM_OptimalSwitch)->Args({3, 13})->Args({8, 64})->Args({16, 256});

void BM_DirichletPrequential(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto data = blobs(n, 2, 10);
  const DirichletStrategy strategy(std::vector<double>(10, 0.5));
  const auto schedule = default_schedule(n, 8, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(prequential_encode(strategy, data, schedule, 0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DirichletPrequential)->Arg(60000);

}  // namespace

BENCHMARK_MAIN();
