#pragma once

#include <string>

#include "urlformer/train.hpp"

namespace urlformer {

// Where training data comes from: either a pre-split TSV pair, or raw
// sources (malicious CSV export + benign URL list) that get deduplicated,
// balanced and split inside cmd_train.
struct DataConfig {
  std::string malicious_csv;
  std::string benign_list;
  std::string train_tsv;
  std::string test_tsv;
  std::size_t per_class = 10000;
  double train_fraction = 0.8;
  bool dedup = true;

  bool presplit() const { return !train_tsv.empty() || !test_tsv.empty(); }
};

struct RunConfig {
  std::string out_dir = ".";
  DataConfig data;
  TrainConfig training;

  void validate() const;  // ConfigError
};

// Strict JSON document: unknown keys are rejected, missing keys take the
// defaults above, types must match exactly.
RunConfig run_config_from_json(const std::string& text);

// Canonical echo of a fully resolved config; parses back to an equal value.
std::string run_config_to_json(const RunConfig& config);

RunConfig load_run_config(const std::string& path);

}  // namespace urlformer
