#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace urlformer {

struct LabeledUrl {
  std::string url;
  int label = 0;  // 0 benign, 1 malicious
  std::string source;

  bool operator==(const LabeledUrl& o) const { return url == o.url && label == o.label; }
};

struct DatasetSplit {
  std::vector<LabeledUrl> train;
  std::vector<LabeledUrl> test;
  std::uint64_t seed = 0;
};

// RFC 4180 field splitting with lenient line endings (LF or CRLF, and
// newlines inside quoted fields). Fully blank lines are dropped.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

// PhishTank-style export: header row with a `url` column (matched
// case-insensitively); every data row becomes a label-1 record. Rows with
// an empty url are skipped and counted into *skipped when given.
std::vector<LabeledUrl> load_malicious_csv(const std::string& path, std::size_t* skipped = nullptr);

// Plain URL list: one label-0 record per nonblank line, whitespace trimmed.
std::vector<LabeledUrl> load_benign_list(const std::string& path);

// Uniformly samples per_class records from each pool without replacement,
// then shuffles the union. Selection and shuffle order are fixed functions
// of the seed: benign pool first, malicious second, one generator
// throughout (see shuffle below).
std::vector<LabeledUrl> balance_and_sample(const std::vector<LabeledUrl>& benign,
                                           const std::vector<LabeledUrl>& malicious,
                                           std::size_t per_class, std::uint64_t seed);

// Seeded Fisher-Yates shuffle followed by a prefix/suffix cut at
// floor(n * train_fraction). The shuffle (descending Fisher-Yates over the
// Rng in rng.hpp) is part of the external contract: a given seed must
// reproduce the same split everywhere.
DatasetSplit split(std::vector<LabeledUrl> data, double train_fraction, std::uint64_t seed);

// In-place descending Fisher-Yates driven by Rng::uniform_index.
void fisher_yates(std::vector<LabeledUrl>& records, std::uint64_t seed);

// Keeps the first record for each distinct url, preserving order.
std::vector<LabeledUrl> dedup_urls(const std::vector<LabeledUrl>& records);

// Dataset cache: `<label><TAB><url>` per line, UTF-8, LF endings.
void save_dataset_tsv(const std::vector<LabeledUrl>& records, const std::string& path);
std::vector<LabeledUrl> load_dataset_tsv(const std::string& path);

}  // namespace urlformer
