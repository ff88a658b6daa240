#include "urlformer/adam.hpp"

#include <cmath>
#include <cstdint>

#include "urlformer/errors.hpp"

namespace urlformer {

template <typename T>
void adam_step(const std::vector<TensorT<T>*>& params, AdamStateT<T>& state, const AdamConfig& cfg) {
  if (params.size() != state.size()) {
    throw UsageError("adam_step over " + std::to_string(params.size()) + " parameters but state holds " +
                     std::to_string(state.size()));
  }
  const std::uint64_t t = state.advance();
  const double bc1 = 1.0 - std::pow(double(cfg.beta1), double(t));
  const double bc2 = 1.0 - std::pow(double(cfg.beta2), double(t));
  const T b1 = T(cfg.beta1), b2 = T(cfg.beta2);
  const T inv_bc1 = T(1.0 / bc1), inv_bc2 = T(1.0 / bc2);
  const T lr = T(cfg.learning_rate), eps = T(cfg.eps);

  for (std::size_t p = 0; p < params.size(); ++p) {
    TensorT<T>& param = *params[p];
    std::vector<T>& m = state.m(p);
    std::vector<T>& v = state.v(p);
    if (m.size() != param.numel()) {
      throw UsageError("adam_step parameter " + std::to_string(p) + " has " +
                       std::to_string(param.numel()) + " elements but state holds " +
                       std::to_string(m.size()));
    }
    const bool has_grad = param.has_grad();
    const T* g = has_grad ? param.grad().data() : nullptr;
    T* w = param.data();
    for (std::size_t i = 0; i < m.size(); ++i) {
      const T gi = has_grad ? g[i] : T(0);
      m[i] = b1 * m[i] + (T(1) - b1) * gi;
      v[i] = b2 * v[i] + (T(1) - b2) * gi * gi;
      const T m_hat = m[i] * inv_bc1;
      const T v_hat = v[i] * inv_bc2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template void adam_step<float>(const std::vector<TensorT<float>*>&, AdamStateT<float>&, const AdamConfig&);
template void adam_step<double>(const std::vector<TensorT<double>*>&, AdamStateT<double>&, const AdamConfig&);

}  // namespace urlformer
