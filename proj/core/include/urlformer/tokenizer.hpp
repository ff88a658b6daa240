#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace urlformer {

// UTF-8 decoding with U+FFFD substitution for invalid bytes; URLs are
// treated as Unicode scalar sequences with no normalization.
std::vector<char32_t> utf8_decode(const std::string& s);
std::string utf8_encode(const std::vector<char32_t>& cps);

// One vocabulary entry as exported: id (>= 2), code point, corpus frequency.
struct VocabEntry {
  std::uint16_t id;
  char32_t cp;
  std::uint64_t frequency;
};

// Frequency-ordered character vocabulary. Id 0 is PAD, id 1 is OOV; ids
// 2..size-1 cover corpus characters in strictly decreasing frequency,
// ties broken by ascending code point. Immutable after construction.
class Vocabulary {
 public:
  static constexpr std::uint16_t kPad = 0;
  static constexpr std::uint16_t kOov = 1;
  static constexpr std::size_t kMaxSize = 256;

  Vocabulary() = default;

  // entries must be sorted by id, contiguous from 2.
  static Vocabulary from_entries(const std::vector<VocabEntry>& entries);

  std::size_t size() const { return id_to_cp_.size(); }  // includes PAD and OOV
  bool contains(char32_t c) const { return cp_to_id_.count(c) != 0; }

  std::uint16_t id_for(char32_t c) const {
    auto it = cp_to_id_.find(c);
    return it == cp_to_id_.end() ? kOov : it->second;
  }

  // Valid for ids in [2, size); PAD and OOV carry no character.
  char32_t cp_for(std::uint16_t id) const;
  std::uint64_t frequency(std::uint16_t id) const;

  std::vector<VocabEntry> entries() const;

  bool operator==(const Vocabulary& other) const {
    return id_to_cp_ == other.id_to_cp_ && freq_ == other.freq_;
  }

 private:
  std::unordered_map<char32_t, std::uint16_t> cp_to_id_;
  std::vector<char32_t> id_to_cp_;  // slots 0 and 1 are sentinels
  std::vector<std::uint64_t> freq_;
};

// Fixed-length encoding of one URL: ids padded with 0 to the model length,
// original_length counting the pre-padding tokens.
struct TokenSequence {
  std::vector<std::uint16_t> ids;
  std::size_t original_length = 0;
};

// Counts character frequencies across the corpus and keeps the max_size-2
// most frequent. Deterministic and permutation-invariant over the corpus.
Vocabulary build_vocab(const std::vector<std::string>& corpus, std::size_t max_size = 256);

// Total over strings: unknown characters become OOV, long URLs truncate,
// short ones right-pad with PAD.
TokenSequence encode(const std::string& url, const Vocabulary& vocab, std::size_t max_len = 256);

// Inverse of encode up to truncation; PAD drops, OOV renders as U+FFFD.
std::string decode(const TokenSequence& seq, const Vocabulary& vocab);

// Text form: one `<id>\t<code point hex>\t<frequency>` line per entry,
// sorted by id; round-trips bit-exactly.
std::string vocab_to_tsv(const Vocabulary& vocab);
Vocabulary vocab_from_tsv(const std::string& text);

void save_vocab(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocab(const std::string& path);

}  // namespace urlformer
