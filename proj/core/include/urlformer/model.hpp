#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "urlformer/autodiff.hpp"
#include "urlformer/rng.hpp"
#include "urlformer/tensor.hpp"
#include "urlformer/tokenizer.hpp"

namespace urlformer {

struct HyperParams {
  std::uint32_t max_len = 256;
  std::uint32_t vocab_size = 256;
  std::uint32_t d_model = 256;
  std::uint32_t heads = 4;
  std::uint32_t ffn_hidden = 128;
  std::uint32_t head_hidden = 64;
  std::uint32_t num_classes = 2;
  float dropout = 0.1f;
  bool causal = false;

  std::uint32_t d_k() const { return d_model / heads; }
  void validate() const;  // ConfigError on any violated constraint

  bool operator==(const HyperParams&) const = default;
};

// Every learned tensor of the classifier. Enumeration order (named_tensors)
// is fixed: it defines the initialization draw order, the optimizer slot
// order and the checkpoint block order.
template <typename T>
struct ModelParamsT {
  HyperParams hp;

  TensorT<T> token_embedding;     // [vocab_size x d_model]
  TensorT<T> position_embedding;  // [max_len x d_model]
  TensorT<T> wq, wk, wv;          // [d_model x d_model], fused per-head projections
  TensorT<T> wo;                  // [d_model x d_model]
  TensorT<T> ffn_w1;              // [d_model x ffn_hidden]
  TensorT<T> ffn_b1;              // [ffn_hidden]
  TensorT<T> ffn_w2;              // [ffn_hidden x d_model]
  TensorT<T> ffn_b2;              // [d_model]
  TensorT<T> ln1_gamma, ln1_beta;  // [d_model]
  TensorT<T> ln2_gamma, ln2_beta;  // [d_model]
  TensorT<T> head_w;              // [d_model x head_hidden]
  TensorT<T> head_b;              // [head_hidden]
  TensorT<T> out_w;               // [head_hidden x num_classes]
  TensorT<T> out_b;               // [num_classes]

  std::vector<std::pair<std::string, TensorT<T>*>> named_tensors();
  std::vector<std::pair<std::string, const TensorT<T>*>> named_tensors() const;
  std::vector<TensorT<T>*> tensors();
  std::size_t parameter_count() const;
  void zero_grads();
};

using ModelParams = ModelParamsT<float>;

// Correctly shaped tensors, zero weights, unit layer-norm gamma. The
// starting point for initialization and for checkpoint loading.
template <typename T>
ModelParamsT<T> shaped_params(const HyperParams& hp);

// Xavier-uniform weights (bound sqrt(6/(rows+cols)) per rank-2 tensor,
// drawn in named_tensors order), zero biases and layer-norm beta, unit
// layer-norm gamma. Bitwise deterministic for a given seed.
template <typename T>
ModelParamsT<T> init_model(const HyperParams& hp, std::uint64_t seed);

// One training/inference pass over a flat batch of token ids
// (ids.size() == batch * hp.max_len). probs is [batch x num_classes];
// param_leaves shares tensors() order so gradients can be read back.
template <typename T>
struct ModelForward {
  typename GraphT<T>::Var probs;
  std::vector<typename GraphT<T>::Var> param_leaves;
};

template <typename T>
ModelForward<T> model_forward(GraphT<T>& g, const ModelParamsT<T>& params,
                              const std::vector<std::uint16_t>& ids, std::size_t batch,
                              bool training, Rng& rng);

// Single-sequence encoder block [L x d_model] -> [L x d_model]:
// y1 = ln(x + dropout(multi-head attention)), y2 = ln(y1 + dropout(ffn)).
template <typename T>
TensorT<T> encoder_block(const ModelParamsT<T>& params, const TensorT<T>& x, bool training, Rng& rng);

struct Prediction {
  int label = 0;    // 1 = malicious
  float score = 0;  // probability of the malicious class
};

// encode -> inference forward -> argmax; a score of exactly 0.5 classifies
// as malicious.
Prediction predict(const ModelParams& params, const Vocabulary& vocab, const std::string& url);
std::vector<Prediction> predict_batch(const ModelParams& params, const Vocabulary& vocab,
                                      const std::vector<std::string>& urls,
                                      std::size_t batch_size = 256);

}  // namespace urlformer
