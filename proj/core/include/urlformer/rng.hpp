#pragma once

#include <cstdint>
#include <random>

namespace urlformer {

// Deterministic random source shared by every stochastic component
// (weight init, dropout, sampling, shuffling).
//
// The engine is std::mt19937_64, which the C++ standard pins bit-exactly.
// All draws below are hand-rolled on top of next_u64() instead of
// std::uniform_*_distribution, whose output is implementation-defined.
// This makes seeds portable across compilers and standard libraries, which
// the dataset split contract relies on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, n) by rejection sampling, bias free.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform_real() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform double in [-bound, bound).
  double uniform_symmetric(double bound) {
    return (2.0 * uniform_real() - 1.0) * bound;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace urlformer
