#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "urlformer/adam.hpp"
#include "urlformer/data.hpp"
#include "urlformer/model.hpp"
#include "urlformer/tokenizer.hpp"

namespace urlformer {

struct TrainConfig {
  std::size_t batch_size = 512;
  std::size_t epochs = 20;
  AdamConfig adam;
  std::uint64_t seed = 0;
  HyperParams hp;
  std::string checkpoint_dir;  // empty: no checkpoint files are written
  std::string history_path;    // empty: no history CSV is written
  bool deterministic_time = false;  // record wall_time_s as 0 for bitwise-stable artifacts

  void validate() const;  // ConfigError

  // Digest over every training-relevant field, stored in checkpoints so a
  // loaded model can be matched to the run that produced it.
  std::array<unsigned char, 32> digest() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;
  double train_acc = 0;
  double val_loss = 0;
  double val_acc = 0;
  double wall_time_s = 0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  ModelParams params;  // state after the final epoch
  std::vector<std::string> checkpoint_paths;
  std::size_t steps = 0;  // optimizer steps taken
  double first_batch_loss = 0;
};

// Seeded shuffle, mini-batch cross-entropy descent with Adam, per-epoch
// validation and checkpointing. The last short batch trains like any other.
TrainResult train(const TrainConfig& config, const DatasetSplit& split, const Vocabulary& vocab,
                  std::ostream* log = nullptr);

// Highest validation accuracy wins; ties prefer lower validation loss,
// then the earlier epoch. Returns the 1-based epoch index.
std::size_t select_checkpoint(const std::vector<EpochRecord>& history);

std::string history_csv(const std::vector<EpochRecord>& history);
std::vector<EpochRecord> history_from_csv(const std::string& text);

}  // namespace urlformer
