#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "urlformer/rng.hpp"
#include "urlformer/tensor.hpp"

namespace urlformer {

namespace detail {

// Row-major GEMM building blocks. All three keep the inner loop running
// over contiguous output elements so the compiler can vectorize them
// without reassociating float sums; the per-element accumulation order is
// fixed, which the bitwise-determinism contract depends on.

// c[m x n] += a[m x k] * b[k x n]
template <typename T>
inline void gemm_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    T* crow = c + i * n;
    for (std::size_t l = 0; l < k; ++l) {
      const T s = arow[l];
      const T* brow = b + l * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += s * brow[j];
    }
  }
}

// c[m x n] += transpose(a[k x m]) * b[k x n]
template <typename T>
inline void gemm_at_b_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t l = 0; l < k; ++l) {
    const T* arow = a + l * m;
    const T* brow = b + l * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T s = arow[i];
      T* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += s * brow[j];
    }
  }
}

// out[c x r] = transpose(in[r x c])
template <typename T>
inline void transpose_copy(const T* in, T* out, std::size_t r, std::size_t c) {
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = in[i * c + j];
}

// Softmax over one contiguous row of length n, max-subtracted.
template <typename T>
inline void softmax_row(const T* in, T* out, std::size_t n) {
  T max = in[0];
  for (std::size_t j = 1; j < n; ++j) max = in[j] > max ? in[j] : max;
  T sum = T(0);
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = std::exp(in[j] - max);
    sum += out[j];
  }
  const T inv = T(1) / sum;
  for (std::size_t j = 0; j < n; ++j) out[j] *= inv;
}

}  // namespace detail

// --- spec primitives ----------------------------------------------------

// Standard matrix product [m x k] * [k x n] -> [m x n].
template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b);

// Row-wise softmax; accepts rank 1 (one row) or rank 2.
template <typename T>
TensorT<T> softmax_rows(const TensorT<T>& x);

// softmax_rows(q * k^T / sqrt(d_k)) * v
template <typename T>
TensorT<T> scaled_dot_attention(const TensorT<T>& q, const TensorT<T>& k, const TensorT<T>& v);

// Elementwise max(0, x).
template <typename T>
TensorT<T> relu(const TensorT<T>& x);

// Per-row normalization to zero mean / unit variance (biased variance),
// scaled by gamma and shifted by beta.
template <typename T>
TensorT<T> layer_norm(const TensorT<T>& x, const TensorT<T>& gamma, const TensorT<T>& beta,
                      T eps = T(1e-5));

// Inverted dropout: zero with probability `rate`, survivors scaled by
// 1/(1-rate). Identity when not training.
template <typename T>
TensorT<T> dropout(const TensorT<T>& x, double rate, bool training, Rng& rng);

// Arithmetic mean over the first axis: [L x d] -> [d].
template <typename T>
TensorT<T> mean_pool_time(const TensorT<T>& x);

// Mean over the batch of -ln(prob of the true class), probabilities
// clamped to [1e-7, 1]. probs is [B x 2], labels hold class ids in {0,1}.
template <typename T>
T cross_entropy(const TensorT<T>& probs, const std::vector<int>& labels);

// --- elementwise helpers used by the model ------------------------------

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b);

// x[R x d] + row[d], broadcast over rows.
template <typename T>
TensorT<T> add_row_broadcast(const TensorT<T>& x, const TensorT<T>& row);

template <typename T>
TensorT<T> scale(const TensorT<T>& x, T factor);

}  // namespace urlformer
