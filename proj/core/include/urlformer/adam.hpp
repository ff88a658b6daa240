#pragma once

#include <cstdint>
#include <vector>

#include "urlformer/tensor.hpp"

namespace urlformer {

struct AdamConfig {
  float learning_rate = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// Moment buffers for a fixed, ordered parameter list. The order given at
// construction is the order adam_step expects forever after.
template <typename T>
class AdamStateT {
 public:
  AdamStateT() = default;

  explicit AdamStateT(const std::vector<const TensorT<T>*>& params) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto* p : params) {
      m_.emplace_back(p->numel(), T(0));
      v_.emplace_back(p->numel(), T(0));
    }
  }

  std::size_t size() const { return m_.size(); }
  std::uint64_t step_count() const { return step_; }
  std::uint64_t advance() { return ++step_; }

  std::vector<T>& m(std::size_t i) { return m_[i]; }
  std::vector<T>& v(std::size_t i) { return v_[i]; }
  const std::vector<T>& m(std::size_t i) const { return m_[i]; }
  const std::vector<T>& v(std::size_t i) const { return v_[i]; }

 private:
  std::vector<std::vector<T>> m_, v_;
  std::uint64_t step_ = 0;
};

// One bias-corrected Adam update. Gradients are read from each parameter's
// grad buffer (absent buffer = zero gradient); the caller zeroes gradients
// between steps.
template <typename T>
void adam_step(const std::vector<TensorT<T>*>& params, AdamStateT<T>& state, const AdamConfig& cfg);

using AdamState = AdamStateT<float>;

}  // namespace urlformer
