#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "urlformer/model.hpp"
#include "urlformer/tokenizer.hpp"

namespace urlformer {

// Self-contained model snapshot: everything needed to score URLs plus the
// provenance of the run that produced it.
struct Checkpoint {
  std::uint16_t version = 1;
  std::array<unsigned char, 32> config_digest{};
  std::uint32_t epoch = 0;
  std::uint64_t seed = 0;
  Vocabulary vocab;
  ModelParams params;
};

// Canonical little-endian byte form. Serializing the same checkpoint twice
// gives identical bytes, so save -> load -> save is a fixed point.
std::string checkpoint_to_bytes(const Checkpoint& ckpt);
Checkpoint checkpoint_from_bytes(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

// file_digest_hex, when given, receives the hex form of the trailing
// integrity digest (the digest of everything before it in the file).
Checkpoint load_checkpoint(const std::string& path, std::string* file_digest_hex = nullptr);

}  // namespace urlformer
