#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>

namespace urlformer {

// Incremental SHA-256 used for checkpoint integrity and config digests.
class Sha256 {
 public:
  Sha256() { reset(); }

  void reset();
  void update(const void* data, std::size_t len);

  // Finalizes and returns the digest; call reset() before reusing.
  std::array<std::uint8_t, 32> finish();

  static std::array<std::uint8_t, 32> digest(const void* data, std::size_t len);
  static std::string hex(const std::array<std::uint8_t, 32>& d);

 private:
  void process_block(const std::uint8_t* block);

  std::array<std::uint32_t, 8> state_;
  std::array<std::uint8_t, 64> buffer_;
  std::size_t buffer_len_ = 0;
  std::uint64_t total_len_ = 0;
};

}  // namespace urlformer
