#include "urlformer/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "urlformer/errors.hpp"
#include "urlformer/sha256.hpp"

namespace urlformer {
namespace {

constexpr char kMagic[4] = {'U', 'R', 'L', 'T'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

// Bounds-checked sequential reader over the serialized body.
class Cursor {
 public:
  Cursor(const std::string& bytes, std::size_t limit) : bytes_(bytes), limit_(limit) {}

  std::uint16_t u16() { return std::uint16_t(u_(2)); }
  std::uint32_t u32() { return std::uint32_t(u_(4)); }
  std::uint64_t u64() { return u_(8); }

  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  std::uint8_t u8() { return std::uint8_t(u_(1)); }

  std::string raw(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }
  bool exhausted() const { return pos_ == limit_; }

 private:
  void need(std::size_t n) {
    if (limit_ - pos_ < n) throw IoError("truncated checkpoint: ran out of bytes at offset " + std::to_string(pos_));
  }

  std::uint64_t u_(std::size_t n) {
    need(n);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      v |= std::uint64_t(std::uint8_t(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += n;
    return v;
  }

  const std::string& bytes_;
  std::size_t limit_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string checkpoint_to_bytes(const Checkpoint& ckpt) {
  std::string out;
  out.append(kMagic, 4);
  put_u16(out, kVersion);
  out.append(reinterpret_cast<const char*>(ckpt.config_digest.data()), ckpt.config_digest.size());
  put_u32(out, ckpt.epoch);
  put_u64(out, ckpt.seed);

  const HyperParams& hp = ckpt.params.hp;
  put_u32(out, hp.max_len);
  put_u32(out, hp.vocab_size);
  put_u32(out, hp.d_model);
  put_u32(out, hp.heads);
  put_u32(out, hp.ffn_hidden);
  put_u32(out, hp.head_hidden);
  put_u32(out, hp.num_classes);
  put_f32(out, hp.dropout);
  out.push_back(hp.causal ? char(1) : char(0));

  const auto entries = ckpt.vocab.entries();
  put_u32(out, std::uint32_t(entries.size()));
  for (const auto& e : entries) {
    put_u32(out, std::uint32_t(e.cp));
    put_u64(out, e.frequency);
  }

  auto named = const_cast<ModelParams&>(ckpt.params).named_tensors();
  put_u32(out, std::uint32_t(named.size()));
  for (const auto& [name, tensor] : named) {
    put_u32(out, std::uint32_t(name.size()));
    out.append(name);
    put_u32(out, std::uint32_t(tensor->rank()));
    for (std::size_t d = 0; d < tensor->rank(); ++d) {
      put_u32(out, std::uint32_t(tensor->extent(d)));
    }
    for (std::size_t i = 0; i < tensor->numel(); ++i) put_f32(out, tensor->at(i));
  }

  const auto digest = Sha256::digest(out.data(), out.size());
  out.append(reinterpret_cast<const char*>(digest.data()), digest.size());
  return out;
}

Checkpoint checkpoint_from_bytes(const std::string& bytes) {
  if (bytes.size() < 4) throw IoError("truncated checkpoint: shorter than the magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not a checkpoint file: bad magic");
  }
  if (bytes.size() < 4 + 2) throw IoError("truncated checkpoint: missing version");
  const std::uint16_t version = std::uint16_t(std::uint8_t(bytes[4])) |
                                std::uint16_t(std::uint8_t(bytes[5])) << 8;
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  if (bytes.size() < 4 + 2 + 32) throw IoError("truncated checkpoint: missing integrity digest");

  const std::size_t body = bytes.size() - 32;
  const auto expect = Sha256::digest(bytes.data(), body);
  if (std::memcmp(expect.data(), bytes.data() + body, 32) != 0) {
    throw CorruptionError("checkpoint integrity digest mismatch");
  }

  Cursor in(bytes, body);
  in.raw(4);
  in.u16();

  Checkpoint ckpt;
  ckpt.version = version;
  {
    const std::string digest = in.raw(32);
    std::memcpy(ckpt.config_digest.data(), digest.data(), 32);
  }
  ckpt.epoch = in.u32();
  ckpt.seed = in.u64();

  HyperParams hp;
  hp.max_len = in.u32();
  hp.vocab_size = in.u32();
  hp.d_model = in.u32();
  hp.heads = in.u32();
  hp.ffn_hidden = in.u32();
  hp.head_hidden = in.u32();
  hp.num_classes = in.u32();
  hp.dropout = in.f32();
  hp.causal = in.u8() != 0;
  try {
    hp.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint carries invalid hyperparameters: ") + e.what());
  }

  const std::uint32_t entry_count = in.u32();
  if (entry_count > Vocabulary::kMaxSize - 2) {
    throw FormatError("checkpoint vocabulary has " + std::to_string(entry_count) + " entries");
  }
  std::vector<VocabEntry> entries;
  entries.reserve(entry_count);
  for (std::uint32_t i = 0; i < entry_count; ++i) {
    VocabEntry e;
    e.id = std::uint16_t(2 + i);
    e.cp = char32_t(in.u32());
    e.frequency = in.u64();
    entries.push_back(e);
  }
  ckpt.vocab = Vocabulary::from_entries(entries);

  ckpt.params = shaped_params<float>(hp);
  auto named = ckpt.params.named_tensors();
  const std::uint32_t tensor_count = in.u32();
  if (tensor_count != named.size()) {
    throw FormatError("checkpoint holds " + std::to_string(tensor_count) + " tensors, expected " +
                      std::to_string(named.size()));
  }
  for (auto& [name, tensor] : named) {
    const std::uint32_t name_len = in.u32();
    if (name_len > 256) throw FormatError("unreasonable tensor name length");
    const std::string got = in.raw(name_len);
    if (got != name) {
      throw FormatError("tensor name mismatch: expected " + name + ", found " + got);
    }
    const std::uint32_t rank = in.u32();
    if (rank != tensor->rank()) {
      throw FormatError("tensor " + name + " has rank " + std::to_string(rank) + ", expected " +
                        std::to_string(tensor->rank()));
    }
    for (std::size_t d = 0; d < tensor->rank(); ++d) {
      const std::uint32_t extent = in.u32();
      if (extent != tensor->extent(d)) {
        throw FormatError("tensor " + name + " extent " + std::to_string(d) + " is " +
                          std::to_string(extent) + ", expected " +
                          std::to_string(tensor->extent(d)));
      }
    }
    for (std::size_t i = 0; i < tensor->numel(); ++i) tensor->at(i) = in.f32();
  }
  if (!in.exhausted()) {
    throw FormatError("checkpoint has " + std::to_string(body - in.pos()) + " trailing bytes");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string bytes = checkpoint_to_bytes(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), std::streamsize(bytes.size()));
  out.flush();
  if (!out) throw IoError("short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path, std::string* file_digest_hex) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path);
  Checkpoint ckpt = checkpoint_from_bytes(bytes);
  if (file_digest_hex) {
    std::array<std::uint8_t, 32> tail;
    std::memcpy(tail.data(), bytes.data() + (bytes.size() - 32), 32);
    *file_digest_hex = Sha256::hex(tail);
  }
  return ckpt;
}

}  // namespace urlformer
