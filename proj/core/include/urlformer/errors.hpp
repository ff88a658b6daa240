#pragma once

#include <stdexcept>
#include <string>

namespace urlformer {

// Error taxonomy. The CLI maps these onto its exit codes: config/format
// problems exit 2, data/IO problems exit 3, training divergence exits 4.

struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParameterError : std::runtime_error {
  explicit ParameterError(const std::string& msg) : std::runtime_error(msg) {}
};

struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct CorruptionError : std::runtime_error {
  explicit CorruptionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss during training. Carries the offending batch index.
struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& msg, std::size_t batch)
      : std::runtime_error(msg), batch_index(batch) {}
  std::size_t batch_index;
};

}  // namespace urlformer
