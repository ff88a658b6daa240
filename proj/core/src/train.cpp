#include "urlformer/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "urlformer/checkpoint.hpp"
#include "urlformer/errors.hpp"
#include "urlformer/metrics.hpp"
#include "urlformer/sha256.hpp"

namespace urlformer {
namespace {

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(text.data(), std::streamsize(text.size()));
  out.flush();
  if (!out) throw IoError("short write to " + path);
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(adam.learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  hp.validate();
}

std::array<unsigned char, 32> TrainConfig::digest() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "batch_size=%zu\nepochs=%zu\nlearning_rate=%.17g\nbeta1=%.17g\nbeta2=%.17g\n"
                "eps=%.17g\nseed=%llu\nmax_len=%u\nvocab_size=%u\nd_model=%u\nheads=%u\n"
                "ffn_hidden=%u\nhead_hidden=%u\nnum_classes=%u\ndropout=%.17g\ncausal=%d\n",
                batch_size, epochs, double(adam.learning_rate), double(adam.beta1),
                double(adam.beta2), double(adam.eps), (unsigned long long)seed, hp.max_len,
                hp.vocab_size, hp.d_model, hp.heads, hp.ffn_hidden, hp.head_hidden,
                hp.num_classes, double(hp.dropout), hp.causal ? 1 : 0);
  const auto d = Sha256::digest(buf, std::char_traits<char>::length(buf));
  std::array<unsigned char, 32> out;
  for (std::size_t i = 0; i < 32; ++i) out[i] = d[i];
  return out;
}

TrainResult train(const TrainConfig& config, const DatasetSplit& split, const Vocabulary& vocab,
                  std::ostream* log) {
  config.validate();
  if (split.train.empty() || split.test.empty()) {
    throw DataError("training needs nonempty train and validation sets, got " +
                    std::to_string(split.train.size()) + "/" + std::to_string(split.test.size()));
  }
  if (vocab.size() > config.hp.vocab_size) {
    throw ConfigError("vocabulary of size " + std::to_string(vocab.size()) +
                      " exceeds the model's table of " + std::to_string(config.hp.vocab_size));
  }

  TrainResult result;
  result.params = init_model<float>(config.hp, config.seed);
  auto masters = result.params.tensors();
  AdamState adam_state([&] {
    std::vector<const Tensor*> view(masters.begin(), masters.end());
    return view;
  }());

  // Separate streams so batch order and dropout masks evolve independently.
  Rng shuffle_rng(config.seed);
  Rng dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  const std::size_t n = split.train.size();
  const std::size_t max_len = config.hp.max_len;
  std::vector<std::size_t> order(n);
  std::vector<std::uint16_t> batch_ids;
  std::vector<int> batch_labels;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();

    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = shuffle_rng.uniform_index(i);
      std::swap(order[i - 1], order[j]);
    }

    double loss_sum = 0;
    std::size_t correct = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const std::size_t b = end - start;

      batch_ids.assign(b * max_len, 0);
      batch_labels.resize(b);
      for (std::size_t i = 0; i < b; ++i) {
        const auto& rec = split.train[order[start + i]];
        const auto seq = encode(rec.url, vocab, max_len);
        std::copy(seq.ids.begin(), seq.ids.end(), batch_ids.begin() + std::ptrdiff_t(i * max_len));
        batch_labels[i] = rec.label;
      }

      Graph g(true);
      auto fwd = model_forward(g, result.params, batch_ids, b, true, dropout_rng);
      auto loss = g.cross_entropy(fwd.probs, batch_labels);
      const double loss_value = double(loss->t.at(0));
      if (!std::isfinite(loss_value)) {
        throw DivergenceError("non-finite loss " + std::to_string(loss_value) + " in epoch " +
                                  std::to_string(epoch) + ", batch " + std::to_string(batch_index),
                              batch_index);
      }
      if (result.steps == 0) result.first_batch_loss = loss_value;
      loss_sum += loss_value * double(b);
      for (std::size_t i = 0; i < b; ++i) {
        const int pred = fwd.probs->t.at(i, 1) >= 0.5f ? 1 : 0;
        if (pred == batch_labels[i]) ++correct;
      }

      g.backward(loss, true);
      for (std::size_t t = 0; t < masters.size(); ++t) {
        if (!fwd.param_leaves[t]->t.has_grad()) continue;
        const auto& src = fwd.param_leaves[t]->t.grad();
        auto& dst = masters[t]->grad();
        for (std::size_t i = 0; i < masters[t]->numel(); ++i) dst[i] += src[i];
      }
      adam_step(masters, adam_state, config.adam);
      result.params.zero_grads();
      ++result.steps;
    }

    const auto val = evaluate_dataset(result.params, vocab, split.test, config.batch_size);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / double(n);
    rec.train_acc = double(correct) / double(n);
    rec.val_loss = val.mean_loss;
    rec.val_acc = val.report.accuracy.value_or(0);
    rec.wall_time_s = config.deterministic_time
                          ? 0.0
                          : std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                          epoch_start)
                                .count();
    result.history.push_back(rec);

    if (!config.checkpoint_dir.empty()) {
      Checkpoint ckpt;
      ckpt.config_digest = config.digest();
      ckpt.epoch = std::uint32_t(epoch);
      ckpt.seed = config.seed;
      ckpt.vocab = vocab;
      ckpt.params = result.params;
      const std::string path =
          config.checkpoint_dir + "/ckpt_epoch_" + std::to_string(epoch) + ".urlt";
      save_checkpoint(ckpt, path);
      result.checkpoint_paths.push_back(path);
    }
    if (!config.history_path.empty()) {
      write_text_file(config.history_path, history_csv(result.history));
    }
    if (log) {
      char line[256];
      std::snprintf(line, sizeof line,
                    "epoch %zu/%zu  train_loss=%.4f  train_acc=%.4f  val_loss=%.4f  val_acc=%.4f\n",
                    epoch, config.epochs, rec.train_loss, rec.train_acc, rec.val_loss,
                    rec.val_acc);
      (*log) << line;
      log->flush();
    }
  }
  return result;
}

std::size_t select_checkpoint(const std::vector<EpochRecord>& history) {
  if (history.empty()) throw UsageError("select_checkpoint over an empty history");
  std::size_t best = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    const auto& cand = history[i];
    const auto& top = history[best];
    if (cand.val_acc > top.val_acc ||
        (cand.val_acc == top.val_acc && cand.val_loss < top.val_loss)) {
      best = i;
    }
  }
  return history[best].epoch;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_loss,train_acc,val_loss,val_acc,wall_time_s\n";
  char buf[192];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f,%.3f\n", r.epoch, r.train_loss,
                  r.train_acc, r.val_loss, r.val_acc, r.wall_time_s);
    out += buf;
  }
  return out;
}

std::vector<EpochRecord> history_from_csv(const std::string& text) {
  std::vector<EpochRecord> out;
  std::size_t pos = 0;
  bool saw_header = false;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != "epoch,train_loss,train_acc,val_loss,val_acc,wall_time_s") {
        throw FormatError("history CSV: unexpected header on line " + std::to_string(line_no));
      }
      saw_header = true;
      continue;
    }
    EpochRecord r;
    unsigned long long epoch = 0;
    if (std::sscanf(line.c_str(), "%llu,%lf,%lf,%lf,%lf,%lf", &epoch, &r.train_loss, &r.train_acc,
                    &r.val_loss, &r.val_acc, &r.wall_time_s) != 6) {
      throw FormatError("history CSV: malformed line " + std::to_string(line_no));
    }
    r.epoch = std::size_t(epoch);
    out.push_back(r);
  }
  if (!saw_header) throw FormatError("history CSV: missing header");
  return out;
}

}  // namespace urlformer
