#include "urlformer/commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>

#include "urlformer/checkpoint.hpp"
#include "urlformer/data.hpp"
#include "urlformer/errors.hpp"
#include "urlformer/metrics.hpp"
#include "urlformer/runconfig.hpp"
#include "urlformer/svgplot.hpp"
#include "urlformer/tokenizer.hpp"
#include "urlformer/train.hpp"

namespace urlformer {
namespace {

std::string join(const std::string& dir, const std::string& name) {
  if (dir.empty() || dir == ".") return name;
  return dir.back() == '/' ? dir + name : dir + "/" + name;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path);
  return text;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(text.data(), std::streamsize(text.size()));
  out.flush();
  if (!out) throw IoError("short write to " + path);
}

void ensure_dir(const std::string& dir) {
  if (dir.empty() || dir == ".") return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

// Exit-code taxonomy shared by every command.
int run_mapped(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    // ConfigError, UsageError, ParameterError, FormatError, CorruptionError.
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

Checkpoint load_checkpoint_or_config_error(const std::string& path, std::string* digest_hex) {
  try {
    return load_checkpoint(path, digest_hex);
  } catch (const std::exception& e) {
    throw ConfigError("cannot load checkpoint " + path + ": " + e.what());
  }
}

std::string metric_line(const char* name, const std::optional<double>& v) {
  char buf[64];
  if (v) {
    std::snprintf(buf, sizeof buf, "%-9s  %.3f\n", name, *v);
  } else {
    std::snprintf(buf, sizeof buf, "%-9s  NA\n", name);
  }
  return buf;
}

std::optional<double> parse_metric_cell(const std::string& cell, std::size_t line_no) {
  if (cell == "NA") return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str() || *end != '\0') {
    throw DataError("metrics CSV: bad number \"" + cell + "\" on line " + std::to_string(line_no));
  }
  return v;
}

}  // namespace

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  return run_mapped(err, [&]() -> int {
    RunConfig config = load_run_config(args.config_path);
    if (args.seed) config.training.seed = *args.seed;
    if (!args.out_dir.empty()) config.out_dir = args.out_dir;
    config.validate();

    DatasetSplit ds;
    if (config.data.presplit()) {
      ds.train = load_dataset_tsv(config.data.train_tsv);
      ds.test = load_dataset_tsv(config.data.test_tsv);
      ds.seed = config.training.seed;
    } else {
      auto malicious = load_malicious_csv(config.data.malicious_csv);
      auto benign = load_benign_list(config.data.benign_list);
      if (config.data.dedup) {
        malicious = dedup_urls(malicious);
        benign = dedup_urls(benign);
      }
      auto pool =
          balance_and_sample(benign, malicious, config.data.per_class, config.training.seed);
      ds = split(std::move(pool), config.data.train_fraction, config.training.seed);
    }

    ensure_dir(config.out_dir);
    save_dataset_tsv(ds.train, join(config.out_dir, "train.tsv"));
    save_dataset_tsv(ds.test, join(config.out_dir, "test.tsv"));

    std::vector<std::string> corpus;
    corpus.reserve(ds.train.size());
    for (const auto& rec : ds.train) corpus.push_back(rec.url);
    const auto vocab = build_vocab(corpus, config.training.hp.vocab_size);
    save_vocab(vocab, join(config.out_dir, "vocab.tsv"));
    write_text_file(join(config.out_dir, "resolved_config.json"), run_config_to_json(config));

    TrainConfig tc = config.training;
    tc.checkpoint_dir = config.out_dir;
    tc.history_path = join(config.out_dir, "history.csv");
    const auto result = train(tc, ds, vocab, &out);

    try {
      write_text_file(join(config.out_dir, "accuracy.svg"), accuracy_svg(result.history));
      write_text_file(join(config.out_dir, "loss.svg"), loss_svg(result.history));
    } catch (const std::exception& e) {
      err << "warning: plot generation failed: " << e.what() << "\n";
    }

    const std::size_t chosen = select_checkpoint(result.history);
    write_text_file(join(config.out_dir, "selected_epoch.txt"), std::to_string(chosen) + "\n");
    out << "selected epoch " << chosen << " (ckpt_epoch_" << chosen << ".urlt)\n";
    return 0;
  });
}

int cmd_predict(const PredictArgs& args, std::ostream& out, std::ostream& err) {
  return run_mapped(err, [&]() -> int {
    const bool has_url = !args.url.empty(), has_input = !args.input_path.empty();
    if (has_url == has_input) {
      throw UsageError("give exactly one of --url or --input");
    }
    const Checkpoint ckpt = load_checkpoint_or_config_error(args.checkpoint_path, nullptr);

    std::vector<std::string> urls;
    std::size_t skipped = 0;
    if (has_url) {
      urls.push_back(args.url);
    } else {
      const std::string text = read_text_file(args.input_path);
      std::size_t pos = 0, line_no = 0;
      while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.find('\t') != std::string::npos) {
          err << "warning: skipping malformed line " << line_no << "\n";
          ++skipped;
          continue;
        }
        urls.push_back(line);
      }
    }

    if (!urls.empty()) {
      const auto preds = predict_batch(ckpt.params, ckpt.vocab, urls);
      char score[32];
      for (std::size_t i = 0; i < urls.size(); ++i) {
        std::snprintf(score, sizeof score, "%.6f", double(preds[i].score));
        out << (preds[i].label == 1 ? "malicious" : "benign") << "\t" << score << "\t" << urls[i]
            << "\n";
      }
    }
    if (skipped) err << "skipped " << skipped << " malformed line(s)\n";
    return 0;
  });
}

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err) {
  return run_mapped(err, [&]() -> int {
    const Checkpoint ckpt = load_checkpoint_or_config_error(args.checkpoint_path, nullptr);
    std::vector<LabeledUrl> records;
    try {
      records = load_dataset_tsv(args.data_tsv);
    } catch (const FormatError& e) {
      throw DataError(e.what());
    }

    const auto eval = evaluate_dataset(ckpt.params, ckpt.vocab, records);
    out << confusion_text(eval.cm) << "\n";
    out << metric_line("accuracy", eval.report.accuracy);
    out << metric_line("precision", eval.report.precision);
    out << metric_line("recall", eval.report.recall);
    out << metric_line("f1", eval.report.f1);

    ensure_dir(args.out_dir);
    write_text_file(join(args.out_dir, "report.csv"),
                    comparison_csv({{"transformer", eval.report}}));
    write_text_file(join(args.out_dir, "confusion.csv"), confusion_csv(eval.cm));
    return 0;
  });
}

int cmd_tokenize(const TokenizeArgs& args, std::ostream& out, std::ostream& err) {
  return run_mapped(err, [&]() -> int {
    Vocabulary vocab;
    try {
      vocab = load_vocab(args.vocab_path);
    } catch (const std::exception& e) {
      throw ConfigError("cannot load vocabulary " + args.vocab_path + ": " + e.what());
    }
    const auto seq = encode(args.url, vocab, 256);
    std::string line;
    for (std::size_t i = 0; i < seq.ids.size(); ++i) {
      if (i) line += ",";
      line += std::to_string(seq.ids[i]);
    }
    out << line << "\n";
    return 0;
  });
}

int cmd_build_vocab(const BuildVocabArgs& args, std::ostream& out, std::ostream& err) {
  return run_mapped(err, [&]() -> int {
    if (args.malicious_csv.empty() && args.benign_list.empty() && args.dataset_tsv.empty()) {
      throw ConfigError("give at least one source (--malicious, --benign or --data)");
    }
    if (args.out_path.empty()) throw ConfigError("--out is required");

    std::vector<std::string> corpus;
    if (!args.malicious_csv.empty()) {
      for (const auto& rec : load_malicious_csv(args.malicious_csv)) corpus.push_back(rec.url);
    }
    if (!args.benign_list.empty()) {
      for (const auto& rec : load_benign_list(args.benign_list)) corpus.push_back(rec.url);
    }
    if (!args.dataset_tsv.empty()) {
      for (const auto& rec : load_dataset_tsv(args.dataset_tsv)) corpus.push_back(rec.url);
    }

    const auto vocab = build_vocab(corpus, args.max_size);
    save_vocab(vocab, args.out_path);
    out << "vocabulary of " << vocab.size() << " ids written to " << args.out_path << "\n";
    return 0;
  });
}

int cmd_plot(const PlotArgs& args, std::ostream& out, std::ostream& err) {
  return run_mapped(err, [&]() -> int {
    std::vector<EpochRecord> history;
    try {
      history = history_from_csv(read_text_file(args.history_path));
    } catch (const FormatError& e) {
      throw DataError(e.what());
    }
    ensure_dir(args.out_dir);
    write_text_file(join(args.out_dir, "accuracy.svg"), accuracy_svg(history));
    write_text_file(join(args.out_dir, "loss.svg"), loss_svg(history));
    out << "wrote accuracy.svg and loss.svg to " << args.out_dir << "\n";
    return 0;
  });
}

int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err) {
  return run_mapped(err, [&]() -> int {
    const std::string text = read_text_file(args.metrics_csv);
    std::vector<ComparisonRow> entries;
    std::size_t pos = 0, line_no = 0;
    bool saw_header = false;
    while (pos < text.size()) {
      std::size_t nl = text.find('\n', pos);
      if (nl == std::string::npos) nl = text.size();
      std::string line = text.substr(pos, nl - pos);
      pos = nl + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (!saw_header) {
        if (line != "model,accuracy,precision,recall,f1") {
          throw DataError("metrics CSV: unexpected header on line " + std::to_string(line_no));
        }
        saw_header = true;
        continue;
      }
      std::vector<std::string> cells;
      std::size_t cell_start = 0;
      for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
          cells.push_back(line.substr(cell_start, i - cell_start));
          cell_start = i + 1;
        }
      }
      if (cells.size() != 5) {
        throw DataError("metrics CSV: expected 5 cells on line " + std::to_string(line_no) +
                        ", got " + std::to_string(cells.size()));
      }
      ComparisonRow row;
      row.name = cells[0];
      row.report.accuracy = parse_metric_cell(cells[1], line_no);
      row.report.precision = parse_metric_cell(cells[2], line_no);
      row.report.recall = parse_metric_cell(cells[3], line_no);
      row.report.f1 = parse_metric_cell(cells[4], line_no);
      entries.push_back(row);
    }
    if (!saw_header) throw DataError("metrics CSV: missing header");
    if (entries.empty()) throw DataError("metrics CSV: no rows");

    const auto ranked = comparison_rank(entries);
    out << comparison_text(ranked);
    if (!args.out_dir.empty()) {
      ensure_dir(args.out_dir);
      write_text_file(join(args.out_dir, "report.csv"), comparison_csv(ranked));
    }
    return 0;
  });
}

}  // namespace urlformer
