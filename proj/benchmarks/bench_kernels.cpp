#include <benchmark/benchmark.h>

#include "egoscene/adam.hpp"
#include "egoscene/kernels.hpp"
#include "egoscene/model.hpp"

using namespace egoscene;
using nn::Tensor;

namespace {

Tensor<float> random_tensor(std::vector<std::size_t> shape, Rng& rng) {
  Tensor<float> t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<float>(rng.normal());
  }
  return t;
}

void BM_GemmNN(benchmark::State& state) {
  const std::size_t M = 496, N = 128, K = 125;
  Rng rng(1);
  Tensor<float> a = random_tensor({M, K}, rng);
  Tensor<float> b = random_tensor({K, N}, rng);
  Tensor<float> c({M, N});
  for (auto _ : state) {
    c.zero();
    nn::gemm_nn(M, N, K, a.data(), K, b.data(), N, c.data(), N);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * M * N * K);
}
BENCHMARK(BM_GemmNN);

void BM_Conv1dForward(benchmark::State& state) {
  const std::size_t B = state.range(0);
  Rng rng(1);
  Tensor<float> x = random_tensor({B, 500, 125}, rng);
  Tensor<float> w = random_tensor({128, 125, 5}, rng);
  Tensor<float> bias = random_tensor({128}, rng);
  for (auto _ : state) {
    Tensor<float> y = nn::conv1d_forward(x, w, bias, 1);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * B * 496 * 128 * 125 * 5);
}
BENCHMARK(BM_Conv1dForward)->Arg(1)->Arg(16);

void BM_Conv1dBackward(benchmark::State& state) {
  const std::size_t B = state.range(0);
  Rng rng(1);
  Tensor<float> x = random_tensor({B, 500, 125}, rng);
  Tensor<float> w = random_tensor({128, 125, 5}, rng);
  Tensor<float> bias = random_tensor({128}, rng);
  Tensor<float> gy = random_tensor({B, 496, 128}, rng);
  Tensor<float> gx, gw, gb;
  for (auto _ : state) {
    nn::conv1d_backward(gy, x, w, std::size_t{1}, gx, gw, gb);
    benchmark::DoNotOptimize(gx.data());
  }
}
BENCHMARK(BM_Conv1dBackward)->Arg(1)->Arg(16);

void BM_TdnnSmallForward(benchmark::State& state) {
  const std::size_t B = state.range(0);
  Rng rng(7);
  Model<float> model(ModelSpec::of(ModelKind::tdnn_small), rng);
  Tensor<float> x = random_tensor({B, 500, 125}, rng);
  Rng drop(3);
  for (auto _ : state) {
    Tensor<float> y = model.forward(x, nn::Mode::train, drop);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_TdnnSmallForward)->Arg(1)->Arg(64);

void BM_TdnnSmallTrainStep(benchmark::State& state) {
  const std::size_t B = 64;
  Rng rng(7);
  Model<float> model(ModelSpec::of(ModelKind::tdnn_small), rng);
  Tensor<float> x = random_tensor({B, 500, 125}, rng);
  std::vector<int> labels(B);
  for (std::size_t i = 0; i < B; ++i) labels[i] = static_cast<int>(i % 4);
  auto params = model.params();
  nn::AdamState<float> adam;
  adam.init(params);
  Rng drop(3);
  for (auto _ : state) {
    Tensor<float> logits = model.forward(x, nn::Mode::train, drop);
    Tensor<float> glogits;
    float loss = nn::softmax_cross_entropy(logits, labels, &glogits);
    benchmark::DoNotOptimize(loss);
    model.backward(glogits);
    nn::adam_step(params, adam);
  }
}
BENCHMARK(BM_TdnnSmallTrainStep);

void BM_AdamStep(benchmark::State& state) {
  Rng rng(1);
  Tensor<float> p = random_tensor({1024, 512}, rng);
  Tensor<float> g = random_tensor({1024, 512}, rng);
  std::vector<nn::ParamRef<float>> params{{"p", &p, &g}};
  nn::AdamState<float> adam;
  adam.init(params);
  for (auto _ : state) {
    nn::adam_step(params, adam);
    benchmark::DoNotOptimize(p.data());
  }
  state.SetItemsProcessed(state.iterations() * p.size());
}
BENCHMARK(BM_AdamStep);

}  // namespace

BENCHMARK_MAIN();
