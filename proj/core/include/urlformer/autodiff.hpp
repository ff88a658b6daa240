#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "urlformer/ops.hpp"
#include "urlformer/rng.hpp"
#include "urlformer/tensor.hpp"

namespace urlformer {

// Reverse-mode automatic differentiation over a define-by-run tape.
//
// Every operation appends one record to the tape as it executes, so the
// tape is topologically ordered by construction and backward() replays it
// exactly once in reverse. Leaves (parameters, inputs) live outside the
// tape; their gradients accumulate across backward calls until the caller
// zeroes them.
template <typename T>
class GraphT {
 public:
  struct Node {
    TensorT<T> t;                    // value plus lazily allocated grad
    bool requires_grad = false;
    bool leaf = false;
    std::function<void()> backward;  // empty for leaves and constants
  };
  using Var = std::shared_ptr<Node>;

  // grad_enabled=false gives a recording-free graph for inference.
  explicit GraphT(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t tape_size() const { return tape_.size(); }

  // Leaf holding externally owned values (parameters, inputs).
  Var leaf(TensorT<T> value, bool requires_grad) {
    auto node = std::make_shared<Node>();
    node->t = std::move(value);
    node->requires_grad = requires_grad && grad_enabled_;
    node->leaf = true;
    return node;
  }

  Var constant(TensorT<T> value) { return leaf(std::move(value), false); }

  // Wraps a persistent parameter node (created once, reused across steps)
  // so its gradient buffer survives between graphs.
  static Var parameter(TensorT<T> value) {
    auto node = std::make_shared<Node>();
    node->t = std::move(value);
    node->requires_grad = true;
    node->leaf = true;
    return node;
  }

  // --- primitive ops ----------------------------------------------------

  Var matmul(const Var& a, const Var& b);
  Var add(const Var& a, const Var& b);
  Var add_row_broadcast(const Var& x, const Var& row);
  Var scale(const Var& x, T factor);
  Var relu(const Var& x);
  Var transpose(const Var& x);
  Var softmax_rows(const Var& x);
  Var layer_norm(const Var& x, const Var& gamma, const Var& beta, T eps = T(1e-5));
  Var dropout(const Var& x, double rate, bool training, Rng& rng);
  Var mean_pool_time(const Var& x);                       // [L x d] -> [d]
  Var mean_pool_seq(const Var& x, std::size_t batch);     // [B*L x d] -> [B x d]
  Var cross_entropy(const Var& probs, std::vector<int> labels);  // -> scalar
  Var weighted_sum(const Var& x, std::vector<T> weights);       // -> scalar

  // Single-sequence attention, composed from the primitives above:
  // softmax_rows(q k^T / sqrt(d_k)) v.
  Var scaled_dot_attention(const Var& q, const Var& k, const Var& v);

  // Fused batched self-attention. q, k, v are [B*L x d_model] with head
  // blocks laid out along columns; output has the same shape and holds
  // Concat(head_1..head_h) ready for the output projection. Softmax
  // probabilities are recomputed in backward instead of stored, keeping
  // memory linear in the activation size.
  Var multi_head_attention(const Var& q, const Var& k, const Var& v, std::size_t batch,
                           std::size_t seq_len, std::size_t heads, bool causal = false);

  // Row lookup: out[b*L+t, :] = token_emb[ids[b*L+t], :] + pos_emb[t, :].
  Var embedding_gather(const Var& token_emb, const Var& pos_emb,
                       std::vector<std::uint16_t> ids, std::size_t seq_len);

  // Reverse sweep from a scalar loss. Seeds d(loss)/d(loss) = 1 and walks
  // the tape backwards once. With release_intermediates=true, every
  // non-leaf value and gradient buffer is freed as soon as it has been
  // consumed; read any activations you need before calling.
  void backward(const Var& loss, bool release_intermediates = false);

 private:
  Var make_op(TensorT<T> value, bool requires_grad);

  bool grad_enabled_;
  std::vector<Var> tape_;
};

using Graph = GraphT<float>;
using Var = GraphT<float>::Var;

}  // namespace urlformer
