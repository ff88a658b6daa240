#include "urlformer/model.hpp"

#include <cmath>

#include "urlformer/errors.hpp"

namespace urlformer {

void HyperParams::validate() const {
  if (heads == 0 || d_model % heads != 0) {
    throw ConfigError("d_model " + std::to_string(d_model) + " not divisible by heads " +
                      std::to_string(heads));
  }
  if (vocab_size < 3 || vocab_size > 256) {
    throw ConfigError("vocab_size must lie in [3, 256], got " + std::to_string(vocab_size));
  }
  if (max_len == 0) throw ConfigError("max_len must be positive");
  if (d_model == 0) throw ConfigError("d_model must be positive");
  if (ffn_hidden == 0) throw ConfigError("ffn_hidden must be positive");
  if (head_hidden == 0) throw ConfigError("head_hidden must be positive");
  if (num_classes != 2) throw ConfigError("num_classes is fixed at 2");
  if (!(dropout >= 0.0f && dropout < 1.0f)) {
    throw ConfigError("dropout must lie in [0, 1), got " + std::to_string(dropout));
  }
}

template <typename T>
std::vector<std::pair<std::string, TensorT<T>*>> ModelParamsT<T>::named_tensors() {
  return {
      {"token_embedding", &token_embedding},
      {"position_embedding", &position_embedding},
      {"wq", &wq},
      {"wk", &wk},
      {"wv", &wv},
      {"wo", &wo},
      {"ffn_w1", &ffn_w1},
      {"ffn_b1", &ffn_b1},
      {"ffn_w2", &ffn_w2},
      {"ffn_b2", &ffn_b2},
      {"ln1_gamma", &ln1_gamma},
      {"ln1_beta", &ln1_beta},
      {"ln2_gamma", &ln2_gamma},
      {"ln2_beta", &ln2_beta},
      {"head_w", &head_w},
      {"head_b", &head_b},
      {"out_w", &out_w},
      {"out_b", &out_b},
  };
}

template <typename T>
std::vector<std::pair<std::string, const TensorT<T>*>> ModelParamsT<T>::named_tensors() const {
  auto mutable_list = const_cast<ModelParamsT<T>*>(this)->named_tensors();
  std::vector<std::pair<std::string, const TensorT<T>*>> out;
  out.reserve(mutable_list.size());
  for (auto& [name, t] : mutable_list) out.emplace_back(name, t);
  return out;
}

template <typename T>
std::vector<TensorT<T>*> ModelParamsT<T>::tensors() {
  std::vector<TensorT<T>*> out;
  for (auto& [name, t] : named_tensors()) out.push_back(t);
  return out;
}

template <typename T>
std::size_t ModelParamsT<T>::parameter_count() const {
  std::size_t n = 0;
  for (auto& [name, t] : named_tensors()) n += t->numel();
  return n;
}

template <typename T>
void ModelParamsT<T>::zero_grads() {
  for (auto* t : tensors()) t->zero_grad();
}

template <typename T>
ModelParamsT<T> shaped_params(const HyperParams& hp) {
  hp.validate();
  const std::size_t d = hp.d_model, v = hp.vocab_size, L = hp.max_len;
  const std::size_t f = hp.ffn_hidden, hh = hp.head_hidden, c = hp.num_classes;

  ModelParamsT<T> p;
  p.hp = hp;
  p.token_embedding = TensorT<T>(Shape{v, d});
  p.position_embedding = TensorT<T>(Shape{L, d});
  p.wq = TensorT<T>(Shape{d, d});
  p.wk = TensorT<T>(Shape{d, d});
  p.wv = TensorT<T>(Shape{d, d});
  p.wo = TensorT<T>(Shape{d, d});
  p.ffn_w1 = TensorT<T>(Shape{d, f});
  p.ffn_b1 = TensorT<T>(Shape{f});
  p.ffn_w2 = TensorT<T>(Shape{f, d});
  p.ffn_b2 = TensorT<T>(Shape{d});
  p.ln1_gamma = TensorT<T>::full(Shape{d}, T(1));
  p.ln1_beta = TensorT<T>(Shape{d});
  p.ln2_gamma = TensorT<T>::full(Shape{d}, T(1));
  p.ln2_beta = TensorT<T>(Shape{d});
  p.head_w = TensorT<T>(Shape{d, hh});
  p.head_b = TensorT<T>(Shape{hh});
  p.out_w = TensorT<T>(Shape{hh, c});
  p.out_b = TensorT<T>(Shape{c});
  return p;
}

template <typename T>
ModelParamsT<T> init_model(const HyperParams& hp, std::uint64_t seed) {
  ModelParamsT<T> p = shaped_params<T>(hp);

  Rng rng(seed);
  for (auto& [name, t] : p.named_tensors()) {
    if (t->rank() != 2) continue;  // biases, gammas and betas keep their fill
    const double bound = std::sqrt(6.0 / double(t->extent(0) + t->extent(1)));
    for (std::size_t i = 0; i < t->numel(); ++i) t->at(i) = T(rng.uniform_symmetric(bound));
  }
  return p;
}

namespace {

template <typename T>
using VarT = typename GraphT<T>::Var;

// Indices into the tensors() order.
enum ParamIx {
  kTok = 0, kPos, kWq, kWk, kWv, kWo, kFfnW1, kFfnB1, kFfnW2, kFfnB2,
  kLn1G, kLn1B, kLn2G, kLn2B, kHeadW, kHeadB, kOutW, kOutB, kParamCount
};

template <typename T>
VarT<T> encoder_block_graph(GraphT<T>& g, const std::vector<VarT<T>>& p, const VarT<T>& x,
                            std::size_t batch, std::size_t seq_len, const HyperParams& hp,
                            bool training, Rng& rng) {
  auto q = g.matmul(x, p[kWq]);
  auto k = g.matmul(x, p[kWk]);
  auto v = g.matmul(x, p[kWv]);
  auto heads = g.multi_head_attention(q, k, v, batch, seq_len, hp.heads, hp.causal);
  auto att = g.dropout(g.matmul(heads, p[kWo]), hp.dropout, training, rng);
  auto y1 = g.layer_norm(g.add(x, att), p[kLn1G], p[kLn1B]);

  auto hidden = g.relu(g.add_row_broadcast(g.matmul(y1, p[kFfnW1]), p[kFfnB1]));
  auto ffn = g.add_row_broadcast(g.matmul(hidden, p[kFfnW2]), p[kFfnB2]);
  auto ffn_do = g.dropout(ffn, hp.dropout, training, rng);
  return g.layer_norm(g.add(y1, ffn_do), p[kLn2G], p[kLn2B]);
}

template <typename T>
std::vector<VarT<T>> leaf_params(GraphT<T>& g, const ModelParamsT<T>& params, bool requires_grad) {
  std::vector<VarT<T>> leaves;
  auto named = const_cast<ModelParamsT<T>&>(params).named_tensors();
  leaves.reserve(named.size());
  for (auto& [name, t] : named) leaves.push_back(g.leaf(*t, requires_grad));
  return leaves;
}

}  // namespace

template <typename T>
ModelForward<T> model_forward(GraphT<T>& g, const ModelParamsT<T>& params,
                              const std::vector<std::uint16_t>& ids, std::size_t batch,
                              bool training, Rng& rng) {
  const HyperParams& hp = params.hp;
  if (batch == 0 || ids.size() != batch * hp.max_len) {
    throw DimensionError("forward over " + std::to_string(ids.size()) + " ids, expected batch " +
                         std::to_string(batch) + " x max_len " + std::to_string(hp.max_len));
  }
  auto p = leaf_params(g, params, g.grad_enabled());

  auto x = g.embedding_gather(p[kTok], p[kPos], ids, hp.max_len);
  auto encoded = encoder_block_graph(g, p, x, batch, hp.max_len, hp, training, rng);
  auto pooled = g.dropout(g.mean_pool_seq(encoded, batch), hp.dropout, training, rng);
  auto hidden = g.relu(g.add_row_broadcast(g.matmul(pooled, p[kHeadW]), p[kHeadB]));
  auto hidden_do = g.dropout(hidden, hp.dropout, training, rng);
  auto logits = g.add_row_broadcast(g.matmul(hidden_do, p[kOutW]), p[kOutB]);

  ModelForward<T> out;
  out.probs = g.softmax_rows(logits);
  out.param_leaves = std::move(p);
  return out;
}

template <typename T>
TensorT<T> encoder_block(const ModelParamsT<T>& params, const TensorT<T>& x, bool training,
                         Rng& rng) {
  if (x.rank() != 2 || x.extent(1) != params.hp.d_model) {
    throw DimensionError("encoder_block input must be [L x " + std::to_string(params.hp.d_model) +
                         "], got " + shape_str(x.shape()));
  }
  GraphT<T> g(false);
  auto p = leaf_params(g, params, false);
  auto y = encoder_block_graph(g, p, g.constant(x), 1, x.extent(0), params.hp, training, rng);
  return y->t;
}

Prediction predict(const ModelParams& params, const Vocabulary& vocab, const std::string& url) {
  return predict_batch(params, vocab, {url}, 1)[0];
}

std::vector<Prediction> predict_batch(const ModelParams& params, const Vocabulary& vocab,
                                      const std::vector<std::string>& urls,
                                      std::size_t batch_size) {
  if (batch_size == 0) throw ParameterError("predict batch size must be positive");
  std::vector<Prediction> out;
  out.reserve(urls.size());
  Rng unused(0);
  for (std::size_t start = 0; start < urls.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, urls.size() - start);
    std::vector<std::uint16_t> ids;
    ids.reserve(n * params.hp.max_len);
    for (std::size_t i = 0; i < n; ++i) {
      const auto seq = encode(urls[start + i], vocab, params.hp.max_len);
      ids.insert(ids.end(), seq.ids.begin(), seq.ids.end());
    }
    GraphT<float> g(false);
    auto fwd = model_forward(g, params, ids, n, false, unused);
    for (std::size_t i = 0; i < n; ++i) {
      const float score = fwd.probs->t.at(i, 1);
      out.push_back({score >= 0.5f ? 1 : 0, score});
    }
  }
  return out;
}

template struct ModelParamsT<float>;
template struct ModelParamsT<double>;
template ModelParamsT<float> shaped_params<float>(const HyperParams&);
template ModelParamsT<double> shaped_params<double>(const HyperParams&);
template ModelParamsT<float> init_model<float>(const HyperParams&, std::uint64_t);
template ModelParamsT<double> init_model<double>(const HyperParams&, std::uint64_t);
template ModelForward<float> model_forward<float>(GraphT<float>&, const ModelParamsT<float>&,
                                                  const std::vector<std::uint16_t>&, std::size_t,
                                                  bool, Rng&);
template ModelForward<double> model_forward<double>(GraphT<double>&, const ModelParamsT<double>&,
                                                    const std::vector<std::uint16_t>&, std::size_t,
                                                    bool, Rng&);
template TensorT<float> encoder_block<float>(const ModelParamsT<float>&, const TensorT<float>&,
                                             bool, Rng&);
template TensorT<double> encoder_block<double>(const ModelParamsT<double>&, const TensorT<double>&,
                                               bool, Rng&);

}  // namespace urlformer
