#include "urlformer/ops.hpp"

#include <algorithm>
#include <cmath>

#include "urlformer/errors.hpp"

namespace urlformer {

namespace {

template <typename T>
void require_rank2(const TensorT<T>& t, const char* what) {
  if (t.rank() != 2) throw DimensionError(std::string(what) + " expects a rank-2 tensor, got " + shape_str(t.shape()));
}

}  // namespace

template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.extent(1) != b.extent(0)) {
    throw DimensionError("matmul shape mismatch: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  TensorT<T> c(Shape{a.extent(0), b.extent(1)});
  detail::gemm_acc(a.data(), b.data(), c.data(), a.extent(0), a.extent(1), b.extent(1));
  return c;
}

template <typename T>
TensorT<T> softmax_rows(const TensorT<T>& x) {
  if (x.rank() != 1 && x.rank() != 2) {
    throw DimensionError("softmax_rows expects rank 1 or 2, got " + shape_str(x.shape()));
  }
  if (x.numel() == 0 || x.cols() == 0) throw DimensionError("softmax_rows on empty row");
  TensorT<T> y(x.shape());
  const std::size_t rows = x.rows(), n = x.cols();
  for (std::size_t i = 0; i < rows; ++i) {
    detail::softmax_row(x.data() + i * n, y.data() + i * n, n);
  }
  return y;
}

template <typename T>
TensorT<T> scaled_dot_attention(const TensorT<T>& q, const TensorT<T>& k, const TensorT<T>& v) {
  require_rank2(q, "scaled_dot_attention");
  require_rank2(k, "scaled_dot_attention");
  require_rank2(v, "scaled_dot_attention");
  if (q.extent(1) != k.extent(1)) {
    throw DimensionError("scaled_dot_attention: q and k disagree on d_k: " + shape_str(q.shape()) +
                         " vs " + shape_str(k.shape()));
  }
  if (k.extent(0) != v.extent(0)) {
    throw DimensionError("scaled_dot_attention: k and v disagree on sequence length: " +
                         shape_str(k.shape()) + " vs " + shape_str(v.shape()));
  }
  const std::size_t lq = q.extent(0), lk = k.extent(0), dk = q.extent(1), dv = v.extent(1);
  const T inv_sqrt_dk = T(1) / std::sqrt(T(dk));

  std::vector<T> kt(dk * lk);
  detail::transpose_copy(k.data(), kt.data(), lk, dk);

  TensorT<T> scores(Shape{lq, lk});
  detail::gemm_acc(q.data(), kt.data(), scores.data(), lq, dk, lk);
  for (T& s : scores.storage()) s *= inv_sqrt_dk;

  TensorT<T> probs = softmax_rows(scores);
  TensorT<T> out(Shape{lq, dv});
  detail::gemm_acc(probs.data(), v.data(), out.data(), lq, lk, dv);
  return out;
}

template <typename T>
TensorT<T> relu(const TensorT<T>& x) {
  TensorT<T> y(x.shape());
  const T* in = x.data();
  T* out = y.data();
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
  return y;
}

template <typename T>
TensorT<T> layer_norm(const TensorT<T>& x, const TensorT<T>& gamma, const TensorT<T>& beta, T eps) {
  if (eps <= T(0)) throw ParameterError("layer_norm eps must be positive");
  const std::size_t rows = x.rows(), d = x.cols();
  if (gamma.numel() != d || beta.numel() != d) {
    throw DimensionError("layer_norm gamma/beta size " + std::to_string(gamma.numel()) + "/" +
                         std::to_string(beta.numel()) + " does not match row width " + std::to_string(d));
  }
  TensorT<T> y(x.shape());
  for (std::size_t i = 0; i < rows; ++i) {
    const T* in = x.data() + i * d;
    T* out = y.data() + i * d;
    T mean = T(0);
    for (std::size_t j = 0; j < d; ++j) mean += in[j];
    mean /= T(d);
    T var = T(0);
    for (std::size_t j = 0; j < d; ++j) {
      const T c = in[j] - mean;
      var += c * c;
    }
    var /= T(d);
    const T inv_std = T(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      out[j] = gamma.at(j) * ((in[j] - mean) * inv_std) + beta.at(j);
    }
  }
  return y;
}

template <typename T>
TensorT<T> dropout(const TensorT<T>& x, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ParameterError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  TensorT<T> y(x.shape());
  const T keep_scale = T(1.0 / (1.0 - rate));
  for (std::size_t i = 0; i < x.numel(); ++i) {
    y.at(i) = rng.uniform_real() >= rate ? x.at(i) * keep_scale : T(0);
  }
  return y;
}

template <typename T>
TensorT<T> mean_pool_time(const TensorT<T>& x) {
  require_rank2(x, "mean_pool_time");
  const std::size_t rows = x.extent(0), d = x.extent(1);
  TensorT<T> y(Shape{d});
  for (std::size_t i = 0; i < rows; ++i) {
    const T* in = x.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) y.at(j) += in[j];
  }
  const T inv = T(1) / T(rows);
  for (std::size_t j = 0; j < d; ++j) y.at(j) *= inv;
  return y;
}

template <typename T>
T cross_entropy(const TensorT<T>& probs, const std::vector<int>& labels) {
  require_rank2(probs, "cross_entropy");
  if (probs.extent(0) != labels.size()) {
    throw UsageError("cross_entropy: " + std::to_string(probs.extent(0)) + " rows vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t n_classes = probs.extent(1);
  T sum = T(0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= n_classes) {
      throw DataError("cross_entropy label out of range at index " + std::to_string(i) + ": " +
                      std::to_string(labels[i]));
    }
    const T p = std::clamp(probs.at(i, static_cast<std::size_t>(labels[i])), T(1e-7), T(1));
    sum -= std::log(p);
  }
  return sum / T(labels.size());
}

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("add shape mismatch: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  TensorT<T> c(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) c.at(i) = a.at(i) + b.at(i);
  return c;
}

template <typename T>
TensorT<T> add_row_broadcast(const TensorT<T>& x, const TensorT<T>& row) {
  const std::size_t rows = x.rows(), d = x.cols();
  if (row.numel() != d) {
    throw DimensionError("add_row_broadcast: row size " + std::to_string(row.numel()) +
                         " vs width " + std::to_string(d));
  }
  TensorT<T> y(x.shape());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < d; ++j) y.at(i * d + j) = x.at(i * d + j) + row.at(j);
  }
  return y;
}

template <typename T>
TensorT<T> scale(const TensorT<T>& x, T factor) {
  TensorT<T> y(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) y.at(i) = x.at(i) * factor;
  return y;
}

#define URLFORMER_INSTANTIATE_OPS(T)                                                              \
  template TensorT<T> matmul(const TensorT<T>&, const TensorT<T>&);                               \
  template TensorT<T> softmax_rows(const TensorT<T>&);                                            \
  template TensorT<T> scaled_dot_attention(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&); \
  template TensorT<T> relu(const TensorT<T>&);                                                    \
  template TensorT<T> layer_norm(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&, T);     \
  template TensorT<T> dropout(const TensorT<T>&, double, bool, Rng&);                             \
  template TensorT<T> mean_pool_time(const TensorT<T>&);                                          \
  template T cross_entropy(const TensorT<T>&, const std::vector<int>&);                           \
  template TensorT<T> add(const TensorT<T>&, const TensorT<T>&);                                  \
  template TensorT<T> add_row_broadcast(const TensorT<T>&, const TensorT<T>&);                    \
  template TensorT<T> scale(const TensorT<T>&, T);

URLFORMER_INSTANTIATE_OPS(float)
URLFORMER_INSTANTIATE_OPS(double)

#undef URLFORMER_INSTANTIATE_OPS

}  // namespace urlformer
