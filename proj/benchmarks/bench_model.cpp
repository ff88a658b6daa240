#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "urlformer/adam.hpp"
#include "urlformer/autodiff.hpp"
#include "urlformer/checkpoint.hpp"
#include "urlformer/model.hpp"
#include "urlformer/tokenizer.hpp"

using namespace urlformer;

namespace {

std::vector<std::string> sample_urls(std::size_t count) {
  std::vector<std::string> urls;
  urls.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    urls.push_back((i % 2 ? "http://verify-account" : "https://docs.example") +
                   std::to_string(i) + ".example.com/path/item" + std::to_string(i * 7));
  }
  return urls;
}

std::vector<std::uint16_t> sample_batch(const HyperParams& hp, const Vocabulary& vocab,
                                        std::size_t batch) {
  const auto urls = sample_urls(batch);
  std::vector<std::uint16_t> ids;
  ids.reserve(batch * hp.max_len);
  for (const auto& url : urls) {
    const auto row = encode(url, vocab, hp.max_len);
    ids.insert(ids.end(), row.ids.begin(), row.ids.end());
  }
  return ids;
}

// Inference forward pass at default model size.
void BM_forward(benchmark::State& state) {
  const HyperParams hp;
  const auto batch = static_cast<std::size_t>(state.range(0));
  const ModelParams params = init_model<float>(hp, 1);
  const Vocabulary vocab = build_vocab(sample_urls(64), hp.vocab_size);
  const auto ids = sample_batch(hp, vocab, batch);
  Rng rng(2);
  for (auto _ : state) {
    Graph g(false);
    benchmark::DoNotOptimize(model_forward(g, params, ids, batch, false, rng));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_forward)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

// Full training step: forward with dropout, loss, backward, Adam update.
void BM_train_step(benchmark::State& state) {
  HyperParams hp;
  hp.max_len = static_cast<std::uint32_t>(state.range(0));
  hp.d_model = static_cast<std::uint32_t>(state.range(1));
  hp.head_hidden = 64;
  const auto batch = static_cast<std::size_t>(state.range(2));

  ModelParams params = init_model<float>(hp, 3);
  const Vocabulary vocab = build_vocab(sample_urls(64), hp.vocab_size);
  const auto ids = sample_batch(hp, vocab, batch);
  std::vector<int> labels(batch);
  for (std::size_t i = 0; i < batch; ++i) labels[i] = static_cast<int>(i % 2);

  auto masters = params.tensors();
  std::vector<const Tensor*> views(masters.begin(), masters.end());
  AdamState st(views);
  const AdamConfig cfg;
  Rng rng(4);

  for (auto _ : state) {
    Graph g(true);
    auto fwd = model_forward(g, params, ids, batch, true, rng);
    auto loss = g.cross_entropy(fwd.probs, labels);
    g.backward(loss, true);
    for (std::size_t t = 0; t < masters.size(); ++t) {
      const auto& src = fwd.param_leaves[t]->t.grad();
      auto& dst = masters[t]->grad();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
    adam_step(masters, st, cfg);
    for (auto* t : masters) {
      auto& gbuf = t->grad();
      std::fill(gbuf.begin(), gbuf.end(), 0.0f);
    }
    benchmark::DoNotOptimize(loss->t.storage().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_train_step)
    ->Args({64, 64, 16})
    ->Args({256, 256, 4})
    ->Unit(benchmark::kMillisecond);

// End-to-end scoring throughput, the serving hot path.
void BM_predict_batch(benchmark::State& state) {
  const HyperParams hp;
  const ModelParams params = init_model<float>(hp, 5);
  const Vocabulary vocab = build_vocab(sample_urls(64), hp.vocab_size);
  const auto urls = sample_urls(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(predict_batch(params, vocab, urls));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(urls.size()));
}
BENCHMARK(BM_predict_batch)->Arg(16)->Unit(benchmark::kMillisecond);

// Serialization round trip at default model size (~1.9 MB image).
void BM_checkpoint_roundtrip(benchmark::State& state) {
  Checkpoint ckpt;
  ckpt.epoch = 1;
  ckpt.seed = 6;
  HyperParams hp;
  ckpt.vocab = build_vocab(sample_urls(64), hp.vocab_size);
  ckpt.params = init_model<float>(hp, 7);
  std::size_t bytes = 0;
  for (auto _ : state) {
    const auto blob = checkpoint_to_bytes(ckpt);
    bytes = blob.size();
    benchmark::DoNotOptimize(checkpoint_from_bytes(blob));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes));
}
BENCHMARK(BM_checkpoint_roundtrip)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
