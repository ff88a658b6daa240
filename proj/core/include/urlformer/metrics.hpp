#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "urlformer/data.hpp"
#include "urlformer/model.hpp"
#include "urlformer/tokenizer.hpp"

namespace urlformer {

// Binary confusion counts; positive means malicious.
struct ConfusionMatrix {
  std::size_t tp = 0;  // malicious flagged malicious
  std::size_t fp = 0;  // benign flagged malicious
  std::size_t fn = 0;  // malicious flagged benign
  std::size_t tn = 0;  // benign flagged benign

  std::size_t total() const { return tp + fp + fn + tn; }
};

// A metric whose denominator is zero stays disengaged rather than being
// forced to 0 or NaN; reports print it as NA.
struct MetricsReport {
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& labels);

MetricsReport metrics(const ConfusionMatrix& cm);

struct DatasetEval {
  ConfusionMatrix cm;
  MetricsReport report;
  double mean_loss = 0;  // mean cross-entropy, probabilities clamped to [1e-7, 1]
};

// Scores every record in inference mode, batched; fully deterministic.
DatasetEval evaluate_dataset(const ModelParams& params, const Vocabulary& vocab,
                             const std::vector<LabeledUrl>& data, std::size_t batch_size = 256);

std::pair<ConfusionMatrix, MetricsReport> evaluate_model(const ModelParams& params,
                                                         const Vocabulary& vocab,
                                                         const std::vector<LabeledUrl>& data);

struct ComparisonRow {
  std::string name;
  MetricsReport report;
};

// Rank by f1 descending; rows without an f1 sort after all that have one;
// ties fall back to accuracy descending, then name.
std::vector<ComparisonRow> comparison_rank(const std::vector<ComparisonRow>& entries);

// Aligned table with 3-decimal cells, NA for disengaged metrics.
std::string comparison_text(const std::vector<ComparisonRow>& ranked);

// `model,accuracy,precision,recall,f1` rows at full precision.
std::string comparison_csv(const std::vector<ComparisonRow>& ranked);

std::string confusion_text(const ConfusionMatrix& cm);
std::string confusion_csv(const ConfusionMatrix& cm);

}  // namespace urlformer
