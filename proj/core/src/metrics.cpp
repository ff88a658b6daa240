#include "urlformer/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "urlformer/errors.hpp"

namespace urlformer {
namespace {

std::string cell(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

std::string full(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

}  // namespace

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size()) {
    throw UsageError("confusion needs matching lengths, got " + std::to_string(preds.size()) +
                     " predictions for " + std::to_string(labels.size()) + " labels");
  }
  if (preds.empty()) throw UsageError("confusion over an empty set");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] == 1) {
      (preds[i] == 1 ? cm.tp : cm.fn) += 1;
    } else {
      (preds[i] == 1 ? cm.fp : cm.tn) += 1;
    }
  }
  return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
  const double tp = double(cm.tp), fp = double(cm.fp), fn = double(cm.fn), tn = double(cm.tn);
  if (cm.total() == 0) throw UsageError("metrics over an all-zero confusion matrix");

  MetricsReport r;
  r.accuracy = (tp + tn) / double(cm.total());
  if (cm.tp + cm.fp > 0) r.precision = tp / (tp + fp);
  if (cm.tp + cm.fn > 0) r.recall = tp / (tp + fn);
  if (r.precision && r.recall && *r.precision + *r.recall > 0) {
    r.f1 = 2 * *r.precision * *r.recall / (*r.precision + *r.recall);
  }
  return r;
}

DatasetEval evaluate_dataset(const ModelParams& params, const Vocabulary& vocab,
                             const std::vector<LabeledUrl>& data, std::size_t batch_size) {
  if (data.empty()) throw UsageError("evaluate_dataset over an empty set");
  if (batch_size == 0) throw UsageError("batch_size must be positive");

  std::vector<std::string> urls;
  urls.reserve(data.size());
  for (const auto& rec : data) urls.push_back(rec.url);
  const auto preds = predict_batch(params, vocab, urls, batch_size);

  std::vector<int> pred_labels(data.size()), true_labels(data.size());
  double loss_sum = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    pred_labels[i] = preds[i].label;
    true_labels[i] = data[i].label;
    const double p1 = double(preds[i].score);
    const double p = data[i].label == 1 ? p1 : 1.0 - p1;
    loss_sum += -std::log(std::min(1.0, std::max(1e-7, p)));
  }

  DatasetEval out;
  out.cm = confusion(pred_labels, true_labels);
  out.report = metrics(out.cm);
  out.mean_loss = loss_sum / double(data.size());
  return out;
}

std::pair<ConfusionMatrix, MetricsReport> evaluate_model(const ModelParams& params,
                                                         const Vocabulary& vocab,
                                                         const std::vector<LabeledUrl>& data) {
  auto r = evaluate_dataset(params, vocab, data);
  return {r.cm, r.report};
}

std::vector<ComparisonRow> comparison_rank(const std::vector<ComparisonRow>& entries) {
  std::vector<ComparisonRow> ranked = entries;
  std::stable_sort(ranked.begin(), ranked.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    const bool fa = a.report.f1.has_value(), fb = b.report.f1.has_value();
    if (fa != fb) return fa;  // rows with an f1 come first
    if (fa && *a.report.f1 != *b.report.f1) return *a.report.f1 > *b.report.f1;
    const double aa = a.report.accuracy.value_or(-1), ab = b.report.accuracy.value_or(-1);
    if (aa != ab) return aa > ab;
    return a.name < b.name;
  });
  return ranked;
}

std::string comparison_text(const std::vector<ComparisonRow>& ranked) {
  std::size_t width = 5;  // "model"
  for (const auto& row : ranked) width = std::max(width, row.name.size());

  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %9s  %9s  %9s  %9s\n", int(width), "model", "accuracy",
                "precision", "recall", "f1");
  out += buf;
  for (const auto& row : ranked) {
    std::snprintf(buf, sizeof buf, "%-*s  %9s  %9s  %9s  %9s\n", int(width), row.name.c_str(),
                  cell(row.report.accuracy).c_str(), cell(row.report.precision).c_str(),
                  cell(row.report.recall).c_str(), cell(row.report.f1).c_str());
    out += buf;
  }
  return out;
}

std::string comparison_csv(const std::vector<ComparisonRow>& ranked) {
  std::string out = "model,accuracy,precision,recall,f1\n";
  for (const auto& row : ranked) {
    out += row.name + "," + full(row.report.accuracy) + "," + full(row.report.precision) + "," +
           full(row.report.recall) + "," + full(row.report.f1) + "\n";
  }
  return out;
}

std::string confusion_text(const ConfusionMatrix& cm) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "                 pred malicious  pred benign\n"
                "true malicious  %15zu  %11zu\n"
                "true benign     %15zu  %11zu\n",
                cm.tp, cm.fn, cm.fp, cm.tn);
  return buf;
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  char buf[128];
  std::snprintf(buf, sizeof buf, ",pred_malicious,pred_benign\ntrue_malicious,%zu,%zu\ntrue_benign,%zu,%zu\n",
                cm.tp, cm.fn, cm.fp, cm.tn);
  return buf;
}

}  // namespace urlformer
