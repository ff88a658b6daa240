#include <benchmark/benchmark.h>

#include <cstring>
#include <string>
#include <vector>

#include "urlformer/adam.hpp"
#include "urlformer/ops.hpp"
#include "urlformer/rng.hpp"
#include "urlformer/sha256.hpp"
#include "urlformer/tokenizer.hpp"

using namespace urlformer;

namespace {

Tensor random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Tensor t = Tensor::zeros({rows, cols});
  Rng rng(seed);
  for (auto& v : t.storage()) v = static_cast<float>(rng.uniform_symmetric(1.0));
  return t;
}

void BM_matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_matrix(n, n, 1);
  const Tensor b = random_matrix(n, n, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(matmul(a, b));
  }
  state.counters["flops"] = benchmark::Counter(
      static_cast<double>(state.iterations()) * 2.0 * n * n * n, benchmark::Counter::kIsRate);
}
BENCHMARK(BM_matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_softmax_rows(benchmark::State& state) {
  const Tensor x = random_matrix(256, 256, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(softmax_rows(x));
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_softmax_rows);

void BM_layer_norm(benchmark::State& state) {
  const Tensor x = random_matrix(256, 256, 4);
  const Tensor gamma = Tensor::full({256}, 1.0f);
  const Tensor beta = Tensor::zeros({256});
  for (auto _ : state) {
    benchmark::DoNotOptimize(layer_norm(x, gamma, beta, 1e-5f));
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_layer_norm);

void BM_scaled_dot_attention(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  const Tensor q = random_matrix(len, 64, 5);
  const Tensor k = random_matrix(len, 64, 6);
  const Tensor v = random_matrix(len, 64, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(scaled_dot_attention(q, k, v));
  }
}
BENCHMARK(BM_scaled_dot_attention)->Arg(64)->Arg(256);

void BM_adam_step(benchmark::State& state) {
  const std::size_t n = 476738;  // parameter count of the default model
  Tensor p = Tensor::zeros({n});
  Rng rng(8);
  for (auto& g : p.grad()) g = static_cast<float>(rng.uniform_symmetric(1e-2));
  std::vector<Tensor*> params = {&p};
  AdamState st(std::vector<const Tensor*>{&p});
  const AdamConfig cfg;
  for (auto _ : state) {
    adam_step(params, st, cfg);
    benchmark::DoNotOptimize(p.storage().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_adam_step);

void BM_sha256(benchmark::State& state) {
  std::vector<unsigned char> buf(1 << 20);
  Rng rng(9);
  for (auto& b : buf) b = static_cast<unsigned char>(rng.uniform_index(256));
  for (auto _ : state) {
    benchmark::DoNotOptimize(Sha256::digest(buf.data(), buf.size()));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(buf.size()));
}
BENCHMARK(BM_sha256);

void BM_tokenize(benchmark::State& state) {
  const std::string url =
      "https://login.example-payments.com/session/refresh?id=8f3a2c&redirect=/account/summary";
  const Vocabulary vocab = build_vocab({url, "https://example.org/other"}, 256);
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode(url, vocab, 256));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_tokenize);

}  // namespace

BENCHMARK_MAIN();
