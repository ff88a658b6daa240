#include "urlformer/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "urlformer/errors.hpp"

namespace urlformer {

namespace {

// dst[L x w] = block of src rows [r0, r0+L) cols [c0, c0+w), row stride ld
template <typename T>
void copy_block(const T* src, std::size_t ld, std::size_t r0, std::size_t c0, std::size_t rows,
                std::size_t cols, T* dst) {
  for (std::size_t i = 0; i < rows; ++i) {
    std::memcpy(dst + i * cols, src + (r0 + i) * ld + c0, cols * sizeof(T));
  }
}

template <typename T>
void add_into_block(T* dst, std::size_t ld, std::size_t r0, std::size_t c0, std::size_t rows,
                    std::size_t cols, const T* src) {
  for (std::size_t i = 0; i < rows; ++i) {
    T* out = dst + (r0 + i) * ld + c0;
    const T* in = src + i * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += in[j];
  }
}

// Scores and probabilities for one (sequence, head) block; shared by the
// fused attention forward and its recomputation in backward.
template <typename T>
void attention_probs(const T* qb, const T* kt, std::size_t len, std::size_t dk, bool causal,
                     T inv_sqrt_dk, std::vector<T>& scores) {
  std::fill(scores.begin(), scores.end(), T(0));
  detail::gemm_acc(qb, kt, scores.data(), len, dk, len);
  for (T& s : scores) s *= inv_sqrt_dk;
  if (causal) {
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t j = i + 1; j < len; ++j) scores[i * len + j] = T(-1e30);
    }
  }
  for (std::size_t i = 0; i < len; ++i) {
    detail::softmax_row(scores.data() + i * len, scores.data() + i * len, len);
  }
}

}  // namespace

template <typename T>
typename GraphT<T>::Var GraphT<T>::make_op(TensorT<T> value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->t = std::move(value);
  node->requires_grad = requires_grad && grad_enabled_;
  return node;
}

template <typename T>
typename GraphT<T>::Var GraphT<T>::matmul(const Var& a, const Var& b) {
  Var out = make_op(urlformer::matmul(a->t, b->t), a->requires_grad || b->requires_grad);
  if (out->requires_grad) {
    Node* self = out.get();
    out->backward = [self, a, b]() {
      const auto& g = self->t.grad();
      const std::size_t m = a->t.extent(0), k = a->t.extent(1), n = b->t.extent(1);
      if (a->requires_grad) {
        std::vector<T> bt(k * n);
        detail::transpose_copy(b->t.data(), bt.data(), k, n);
        detail::gemm_acc(g.data(), bt.data(), a->t.grad_data(), m, n, k);
      }
      if (b->requires_grad) {
        detail::gemm_at_b_acc(a->t.data(), g.data(), b->t.grad_data(), k, m, n);
      }
    };
    tape_.push_back(out);
  }
  return out;
}

template <typename T>
typename GraphT<T>::Var GraphT<T>::add(const Var& a, const Var& b) {
  Var out = make_op(urlformer::add(a->t, b->t), a->requires_grad || b->requires_grad);
  if (out->requires_grad) {
    Node* self = out.get();
    out->backward = [self, a, b]() {
      const auto& g = self->t.grad();
      if (a->requires_grad) {
        T* ga = a->t.grad_data();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b->requires_grad) {
        T* gb = b->t.grad_data();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    };
    tape_.push_back(out);
  }
  return out;
}

template <typename T>
typename GraphT<T>::Var GraphT<T>::add_row_broadcast(const Var& x, const Var& row) {
  Var out = make_op(urlformer::add_row_broadcast(x->t, row->t), x->requires_grad || row->requires_grad);
  if (out->requires_grad) {
    Node* self = out.get();
    out->backward = [self, x, row]() {
      const auto& g = self->t.grad();
      const std::size_t rows = self->t.rows(), d = self->t.cols();
      if (x->requires_grad) {
        T* gx = x->t.grad_data();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
      if (row->requires_grad) {
        T* gr = row->t.grad_data();
        for (std::size_t i = 0; i < rows; ++i) {
          for (std::size_t j = 0; j < d; ++j) gr[j] += g[i * d + j];
        }
      }
    };
    tape_.push_back(out);
  }
  return out;
}

template <typename T>
typename GraphT<T>::Var GraphT<T>::scale(const Var& x, T factor) {
  Var out = make_op(urlformer::scale(x->t, factor), x->requires_grad);
  if (out->requires_grad) {
    Node* self = out.get();
    out->backward = [self, x, factor]() {
      const auto& g = self->t.grad();
      T* gx = x->t.grad_data();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor;
    };
    tape_.push_back(out);
  }
  return out;
}

template <typename T>
typename GraphT<T>::Var GraphT<T>::relu(const Var& x) {
  Var out = make_op(urlformer::relu(x->t), x->requires_grad);
  if (out->requires_grad) {
    Node* self = out.get();
    out->backward = [self, x]() {
      const auto& g = self->t.grad();
      T* gx = x->t.grad_data();
      const T* in = x->t.data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (in[i] > T(0)) gx[i] += g[i];
      }
    };
    tape_.push_back(out);
  }
  return out;
}

template <typename T>
typename GraphT<T>::Var GraphT<T>::transpose(const Var& x) {
  if (x->t.rank() != 2) throw DimensionError("transpose expects rank 2, got " + shape_str(x->t.shape()));
  const std::size_t r = x->t.extent(0), c = x->t.extent(1);
  TensorT<T> y(Shape{c, r});
  detail::transpose_copy(x->t.data(), y.data(), r, c);
  Var out = make_op(std::move(y), x->requires_grad);
  if (out->requires_grad) {
    Node* self = out.get();
    out->backward = [self, x, r, c]() {
      const auto& g = self->t.grad();
      T* gx = x->t.grad_data();
      for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j < r; ++j) gx[j * c + i] += g[i * r + j];
      }
    };
    tape_.push_back(out);
  }
  return out;
}

template <typename T>
typename GraphT<T>::Var GraphT<T>::softmax_rows(const Var& x) {
  Var out = make_op(urlformer::softmax_rows(x->t), x->requires_grad);
  if (out->requires_grad) {
    Node* self = out.get();
    out->backward = [self, x]() {
      const auto& g = self->t.grad();
      const T* y = self->t.data();
      T* gx = x->t.grad_data();
      const std::size_t rows = self->t.rows(), n = self->t.cols();
      for (std::size_t i = 0; i < rows; ++i) {
        const T* yr = y + i * n;
        const T* gr = g.data() + i * n;
        T dot = T(0);
        for (std::size_t j = 0; j < n; ++j) dot += gr[j] * yr[j];
        T* gxr = gx + i * n;
        for (std::size_t j = 0; j < n; ++j) gxr[j] += yr[j] * (gr[j] - dot);
      }
    };
    tape_.push_back(out);
  }
  return out;
}

template <typename T>
typename GraphT<T>::Var GraphT<T>::layer_norm(const Var& x, const Var& gamma, const Var& beta, T eps) {
  Var out = make_op(urlformer::layer_norm(x->t, gamma->t, beta->t, eps),
                    x->requires_grad || gamma->requires_grad || beta->requires_grad);
  if (out->requires_grad) {
    Node* self = out.get();
    out->backward = [self, x, gamma, beta, eps]() {
      const auto& g = self->t.grad();
      const std::size_t rows = x->t.rows(), d = x->t.cols();
      const T* in = x->t.data();
      const T* gam = gamma->t.data();
      std::vector<T> xhat(d);
      for (std::size_t i = 0; i < rows; ++i) {
        const T* xr = in + i * d;
        const T* gr = g.data() + i * d;
        T mean = T(0);
        for (std::size_t j = 0; j < d; ++j) mean += xr[j];
        mean /= T(d);
        T var = T(0);
        for (std::size_t j = 0; j < d; ++j) {
          const T c = xr[j] - mean;
          var += c * c;
        }
        var /= T(d);
        const T inv_std = T(1) / std::sqrt(var + eps);
        for (std::size_t j = 0; j < d; ++j) xhat[j] = (xr[j] - mean) * inv_std;

        if (gamma->requires_grad) {
          T* gg = gamma->t.grad_data();
          for (std::size_t j = 0; j < d; ++j) gg[j] += gr[j] * xhat[j];
        }
        if (beta->requires_grad) {
          T* gb = beta->t.grad_data();
          for (std::size_t j = 0; j < d; ++j) gb[j] += gr[j];
        }
        if (x->requires_grad) {
          T mean_gh = T(0), mean_ghx = T(0);
          for (std::size_t j = 0; j < d; ++j) {
            const T gh = gr[j] * gam[j];
            mean_gh += gh;
            mean_ghx += gh * xhat[j];
          }
          mean_gh /= T(d);
          mean_ghx /= T(d);
          T* gx = x->t.grad_data() + i * d;
          for (std::size_t j = 0; j < d; ++j) {
            const T gh = gr[j] * gam[j];
            gx[j] += (gh - mean_gh - xhat[j] * mean_ghx) * inv_std;
          }
        }
      }
    };
    tape_.push_back(out);
  }
  return out;
}

template <typename T>
typename GraphT<T>::Var GraphT<T>::dropout(const Var& x, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ParameterError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) {
    // Identity; no tape record needed beyond pass-through of the value.
    Var out = make_op(x->t, x->requires_grad);
    if (out->requires_grad) {
      Node* self = out.get();
      out->backward = [self, x]() {
        const auto& g = self->t.grad();
        T* gx = x->t.grad_data();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      };
      tape_.push_back(out);
    }
    return out;
  }
  const T keep_scale = T(1.0 / (1.0 - rate));
  TensorT<T> y(x->t.shape());
  std::vector<T> mask(x->t.numel());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = rng.uniform_real() >= rate ? keep_scale : T(0);
    y.at(i) = x->t.at(i) * mask[i];
  }
  Var out = make_op(std::move(y), x->requires_grad);
  if (out->requires_grad) {
    Node* self = out.get();
    out->backward = [self, x, mask = std::move(mask)]() {
      const auto& g = self->t.grad();
      T* gx = x->t.grad_data();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
    };
    tape_.push_back(out);
  }
  return out;
}

template <typename T>
typename GraphT<T>::Var GraphT<T>::mean_pool_time(const Var& x) {
  Var out = make_op(urlformer::mean_pool_time(x->t), x->requires_grad);
  if (out->requires_grad) {
    Node* self = out.get();
    out->backward = [self, x]() {
      const auto& g = self->t.grad();
      const std::size_t rows = x->t.extent(0), d = x->t.extent(1);
      const T inv = T(1) / T(rows);
      T* gx = x->t.grad_data();
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += g[j] * inv;
      }
    };
    tape_.push_back(out);
  }
  return out;
}

template <typename T>
typename GraphT<T>::Var GraphT<T>::mean_pool_seq(const Var& x, std::size_t batch) {
  if (x->t.rank() != 2) throw DimensionError("mean_pool_seq expects rank 2, got " + shape_str(x->t.shape()));
  const std::size_t total = x->t.extent(0), d = x->t.extent(1);
  if (batch == 0 || total % batch != 0) {
    throw DimensionError("mean_pool_seq: " + std::to_string(total) + " rows not divisible into " +
                         std::to_string(batch) + " sequences");
  }
  const std::size_t len = total / batch;
  TensorT<T> y(Shape{batch, d});
  for (std::size_t b = 0; b < batch; ++b) {
    T* out_row = y.data() + b * d;
    for (std::size_t t = 0; t < len; ++t) {
      const T* in = x->t.data() + (b * len + t) * d;
      for (std::size_t j = 0; j < d; ++j) out_row[j] += in[j];
    }
    const T inv = T(1) / T(len);
    for (std::size_t j = 0; j < d; ++j) out_row[j] *= inv;
  }
  Var out = make_op(std::move(y), x->requires_grad);
  if (out->requires_grad) {
    Node* self = out.get();
    out->backward = [self, x, batch, len, d]() {
      const auto& g = self->t.grad();
      const T inv = T(1) / T(len);
      T* gx = x->t.grad_data();
      for (std::size_t b = 0; b < batch; ++b) {
        const T* gr = g.data() + b * d;
        for (std::size_t t = 0; t < len; ++t) {
          T* gxr = gx + (b * len + t) * d;
          for (std::size_t j = 0; j < d; ++j) gxr[j] += gr[j] * inv;
        }
      }
    };
    tape_.push_back(out);
  }
  return out;
}

template <typename T>
typename GraphT<T>::Var GraphT<T>::cross_entropy(const Var& probs, std::vector<int> labels) {
  const T loss = urlformer::cross_entropy(probs->t, labels);
  Var out = make_op(TensorT<T>::scalar(loss), probs->requires_grad);
  if (out->requires_grad) {
    Node* self = out.get();
    out->backward = [self, probs, labels = std::move(labels)]() {
      const T g = self->t.grad()[0];
      const std::size_t n_classes = probs->t.extent(1);
      const T inv_batch = T(1) / T(labels.size());
      T* gp = probs->t.grad_data();
      for (std::size_t i = 0; i < labels.size(); ++i) {
        const T p = probs->t.at(i, static_cast<std::size_t>(labels[i]));
        if (p > T(1e-7) && p < T(1)) {
          gp[i * n_classes + labels[i]] -= g * inv_batch / p;
        }
      }
    };
    tape_.push_back(out);
  }
  return out;
}

template <typename T>
typename GraphT<T>::Var GraphT<T>::weighted_sum(const Var& x, std::vector<T> weights) {
  if (weights.size() != x->t.numel()) {
    throw DimensionError("weighted_sum over " + std::to_string(x->t.numel()) + " elements got " +
                         std::to_string(weights.size()) + " weights");
  }
  T acc = T(0);
  for (std::size_t i = 0; i < weights.size(); ++i) acc += x->t.at(i) * weights[i];
  Var out = make_op(TensorT<T>::scalar(acc), x->requires_grad);
  if (out->requires_grad) {
    Node* self = out.get();
    out->backward = [self, x, weights = std::move(weights)]() {
      const T g = self->t.grad()[0];
      T* gx = x->t.grad_data();
      for (std::size_t i = 0; i < weights.size(); ++i) gx[i] += g * weights[i];
    };
    tape_.push_back(out);
  }
  return out;
}

template <typename T>
typename GraphT<T>::Var GraphT<T>::scaled_dot_attention(const Var& q, const Var& k, const Var& v) {
  if (q->t.rank() != 2 || k->t.rank() != 2 || v->t.rank() != 2) {
    throw DimensionError("scaled_dot_attention expects rank-2 q, k, v");
  }
  if (q->t.extent(1) != k->t.extent(1)) {
    throw DimensionError("scaled_dot_attention: q and k disagree on d_k: " + shape_str(q->t.shape()) +
                         " vs " + shape_str(k->t.shape()));
  }
  if (k->t.extent(0) != v->t.extent(0)) {
    throw DimensionError("scaled_dot_attention: k and v disagree on sequence length: " +
                         shape_str(k->t.shape()) + " vs " + shape_str(v->t.shape()));
  }
  const T inv_sqrt_dk = T(1) / std::sqrt(T(q->t.extent(1)));
  Var scores = scale(matmul(q, transpose(k)), inv_sqrt_dk);
  return matmul(softmax_rows(scores), v);
}

template <typename T>
typename GraphT<T>::Var GraphT<T>::multi_head_attention(const Var& q, const Var& k, const Var& v,
                                                        std::size_t batch, std::size_t seq_len,
                                                        std::size_t heads, bool causal) {
  if (q->t.rank() != 2 || k->t.rank() != 2 || v->t.rank() != 2) {
    throw DimensionError("multi_head_attention expects rank-2 q, k, v");
  }
  const std::size_t d_model = q->t.extent(1);
  if (q->t.extent(0) != batch * seq_len || !q->t.same_shape(k->t) || !q->t.same_shape(v->t)) {
    throw DimensionError("multi_head_attention: q/k/v must all be [" + std::to_string(batch * seq_len) +
                         " x d_model], got " + shape_str(q->t.shape()) + ", " + shape_str(k->t.shape()) +
                         ", " + shape_str(v->t.shape()));
  }
  if (heads == 0 || d_model % heads != 0) {
    throw DimensionError("multi_head_attention: d_model " + std::to_string(d_model) +
                         " not divisible by heads " + std::to_string(heads));
  }
  const std::size_t dk = d_model / heads;
  const T inv_sqrt_dk = T(1) / std::sqrt(T(dk));

  TensorT<T> y(q->t.shape());
  {
    std::vector<T> qb(seq_len * dk), kb(seq_len * dk), vb(seq_len * dk), kt(dk * seq_len);
    std::vector<T> probs(seq_len * seq_len), ob(seq_len * dk);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t r0 = b * seq_len, c0 = h * dk;
        copy_block(q->t.data(), d_model, r0, c0, seq_len, dk, qb.data());
        copy_block(k->t.data(), d_model, r0, c0, seq_len, dk, kb.data());
        copy_block(v->t.data(), d_model, r0, c0, seq_len, dk, vb.data());
        detail::transpose_copy(kb.data(), kt.data(), seq_len, dk);
        attention_probs(qb.data(), kt.data(), seq_len, dk, causal, inv_sqrt_dk, probs);
        std::fill(ob.begin(), ob.end(), T(0));
        detail::gemm_acc(probs.data(), vb.data(), ob.data(), seq_len, seq_len, dk);
        for (std::size_t i = 0; i < seq_len; ++i) {
          std::memcpy(y.data() + (r0 + i) * d_model + c0, ob.data() + i * dk, dk * sizeof(T));
        }
      }
    }
  }

  Var out = make_op(std::move(y), q->requires_grad || k->requires_grad || v->requires_grad);
  if (out->requires_grad) {
    Node* self = out.get();
    out->backward = [self, q, k, v, batch, seq_len, heads, dk, causal, inv_sqrt_dk]() {
      const std::size_t d_model = heads * dk;
      const auto& g = self->t.grad();
      std::vector<T> qb(seq_len * dk), kb(seq_len * dk), vb(seq_len * dk), kt(dk * seq_len);
      std::vector<T> vt(dk * seq_len), probs(seq_len * seq_len), gob(seq_len * dk);
      std::vector<T> gp(seq_len * seq_len), gs(seq_len * seq_len);
      std::vector<T> gq(seq_len * dk), gk(seq_len * dk), gv(seq_len * dk);
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t h = 0; h < heads; ++h) {
          const std::size_t r0 = b * seq_len, c0 = h * dk;
          copy_block(q->t.data(), d_model, r0, c0, seq_len, dk, qb.data());
          copy_block(k->t.data(), d_model, r0, c0, seq_len, dk, kb.data());
          copy_block(v->t.data(), d_model, r0, c0, seq_len, dk, vb.data());
          detail::transpose_copy(kb.data(), kt.data(), seq_len, dk);
          attention_probs(qb.data(), kt.data(), seq_len, dk, causal, inv_sqrt_dk, probs);
          copy_block(g.data(), d_model, r0, c0, seq_len, dk, gob.data());

          // gP = gO V^T, gV += P^T gO
          detail::transpose_copy(vb.data(), vt.data(), seq_len, dk);
          std::fill(gp.begin(), gp.end(), T(0));
          detail::gemm_acc(gob.data(), vt.data(), gp.data(), seq_len, dk, seq_len);
          if (v->requires_grad) {
            std::fill(gv.begin(), gv.end(), T(0));
            detail::gemm_at_b_acc(probs.data(), gob.data(), gv.data(), seq_len, seq_len, dk);
            add_into_block(v->t.grad_data(), d_model, r0, c0, seq_len, dk, gv.data());
          }

          // Softmax jacobian, then fold in the 1/sqrt(d_k) scale once.
          for (std::size_t i = 0; i < seq_len; ++i) {
            const T* pr = probs.data() + i * seq_len;
            const T* gpr = gp.data() + i * seq_len;
            T dot = T(0);
            for (std::size_t j = 0; j < seq_len; ++j) dot += gpr[j] * pr[j];
            T* gsr = gs.data() + i * seq_len;
            for (std::size_t j = 0; j < seq_len; ++j) gsr[j] = pr[j] * (gpr[j] - dot) * inv_sqrt_dk;
          }

          if (q->requires_grad) {
            std::fill(gq.begin(), gq.end(), T(0));
            detail::gemm_acc(gs.data(), kb.data(), gq.data(), seq_len, seq_len, dk);
            add_into_block(q->t.grad_data(), d_model, r0, c0, seq_len, dk, gq.data());
          }
          if (k->requires_grad) {
            std::fill(gk.begin(), gk.end(), T(0));
            detail::gemm_at_b_acc(gs.data(), qb.data(), gk.data(), seq_len, seq_len, dk);
            add_into_block(k->t.grad_data(), d_model, r0, c0, seq_len, dk, gk.data());
          }
        }
      }
    };
    tape_.push_back(out);
  }
  return out;
}

template <typename T>
typename GraphT<T>::Var GraphT<T>::embedding_gather(const Var& token_emb, const Var& pos_emb,
                                                    std::vector<std::uint16_t> ids,
                                                    std::size_t seq_len) {
  if (token_emb->t.rank() != 2 || pos_emb->t.rank() != 2) {
    throw DimensionError("embedding_gather expects rank-2 embedding tables");
  }
  if (seq_len == 0 || ids.size() % seq_len != 0) {
    throw DimensionError("embedding_gather: " + std::to_string(ids.size()) +
                         " ids not divisible by sequence length " + std::to_string(seq_len));
  }
  const std::size_t vocab = token_emb->t.extent(0), d = token_emb->t.extent(1);
  if (pos_emb->t.extent(1) != d) throw DimensionError("embedding tables disagree on width");
  if (pos_emb->t.extent(0) < seq_len) {
    throw DimensionError("position table covers " + std::to_string(pos_emb->t.extent(0)) +
                         " positions, need " + std::to_string(seq_len));
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= vocab) {
      throw DataError("token id " + std::to_string(ids[i]) + " at position " + std::to_string(i) +
                      " outside vocabulary of size " + std::to_string(vocab));
    }
  }

  TensorT<T> y(Shape{ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const T* tok = token_emb->t.data() + std::size_t(ids[i]) * d;
    const T* pos = pos_emb->t.data() + (i % seq_len) * d;
    T* out_row = y.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) out_row[j] = tok[j] + pos[j];
  }

  Var out = make_op(std::move(y), token_emb->requires_grad || pos_emb->requires_grad);
  if (out->requires_grad) {
    Node* self = out.get();
    out->backward = [self, token_emb, pos_emb, ids = std::move(ids), seq_len, d]() {
      const auto& g = self->t.grad();
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const T* gr = g.data() + i * d;
        if (token_emb->requires_grad) {
          T* gt = token_emb->t.grad_data() + std::size_t(ids[i]) * d;
          for (std::size_t j = 0; j < d; ++j) gt[j] += gr[j];
        }
        if (pos_emb->requires_grad) {
          T* gp = pos_emb->t.grad_data() + (i % seq_len) * d;
          for (std::size_t j = 0; j < d; ++j) gp[j] += gr[j];
        }
      }
    };
    tape_.push_back(out);
  }
  return out;
}

template <typename T>
void GraphT<T>::backward(const Var& loss, bool release_intermediates) {
  if (loss->t.numel() != 1) {
    throw UsageError("backward requires a scalar loss, got shape " + shape_str(loss->t.shape()));
  }
  // Leaf gradients accumulate across passes; tape-node gradients are
  // per-pass scratch and must start clean or a second backward over the
  // same graph would double-count.
  for (auto& node : tape_) node->t.drop_grad();
  loss->t.grad()[0] += T(1);
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) {
    Node* node = it->get();
    if (node->t.has_grad() && node->backward) node->backward();
    if (release_intermediates && !node->leaf) node->t.release();
  }
}

template class GraphT<float>;
template class GraphT<double>;

}  // namespace urlformer
