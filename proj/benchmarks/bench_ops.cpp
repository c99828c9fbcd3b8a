#include <benchmark/benchmark.h>

#include "gdr/nn.hpp"
#include "gdr/ops.hpp"
#include "gdr/params.hpp"
#include "gdr/rng.hpp"

using namespace gdr;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, bool requires_grad = false) {
  Tensor t(std::move(shape), requires_grad);
  for (double& v : *t.data) v = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_matmul_forward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = random_tensor({n, n}, rng);
  const Tensor b = random_tensor({n, n}, rng);
  NoGradGuard no_grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(matmul(a, b).data->data());
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_matmul_forward)->Arg(16)->Arg(64)->Arg(128);

void BM_matmul_backward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  Tensor a = random_tensor({n, n}, rng, true);
  Tensor b = random_tensor({n, n}, rng, true);
  for (auto _ : state) {
    a.zero_grad();
    b.zero_grad();
    Tensor loss = mean_rows(matmul(a, b));
    Tensor ones = Tensor::full({n, 1}, 1.0);
    matmul(loss, ones).backward();
  }
}
BENCHMARK(BM_matmul_backward)->Arg(16)->Arg(64);

void BM_multi_head_attention(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  const std::size_t hidden = 32;
  Rng rng(3);
  ParameterStore store;
  ParamBuilder builder(store, &rng);
  const AttentionParams params = builder.attention("attn", hidden, 4);
  const Tensor x = random_tensor({len, hidden}, rng);
  const AttnMask causal = AttnMask::causal(len);
  NoGradGuard no_grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(multi_head_attention(x, x, x, params, &causal).data->data());
  }
}
BENCHMARK(BM_multi_head_attention)->Arg(8)->Arg(32)->Arg(64);

void BM_layer_norm(benchmark::State& state) {
  Rng rng(4);
  const Tensor x = random_tensor({64, 64}, rng);
  const Tensor gain = Tensor::full({1, 64}, 1.0);
  const Tensor bias = Tensor::zeros({1, 64});
  NoGradGuard no_grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(layer_norm_rows(x, gain, bias).data->data());
  }
}
BENCHMARK(BM_layer_norm);

void BM_cross_entropy(benchmark::State& state) {
  const auto v = static_cast<std::size_t>(state.range(0));
  Rng rng(5);
  Tensor logits = random_tensor({32, v}, rng, true);
  std::vector<int> targets(32);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    targets[i] = static_cast<int>(1 + rng.next_index(v - 1));
  }
  for (auto _ : state) {
    logits.zero_grad();
    Tensor loss = cross_entropy_with_logits(logits, targets, 0);
    loss.backward();
    benchmark::DoNotOptimize(logits.grad->data());
  }
}
BENCHMARK(BM_cross_entropy)->Arg(64)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
