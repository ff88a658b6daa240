#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "urlformer/commands.hpp"
#include "urlformer/server.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Character-level transformer for malicious URL detection"};
  app.require_subcommand(1);

  urlformer::TrainArgs train_args;
  std::optional<std::uint64_t> seed;
  auto* train = app.add_subcommand("train", "Train from a JSON config and write run artifacts");
  train->add_option("--config", train_args.config_path, "JSON run configuration")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "Override training.seed");
  train->add_option("--out", train_args.out_dir, "Override the output directory");

  urlformer::PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "Score URLs with a trained checkpoint");
  predict->add_option("--checkpoint", predict_args.checkpoint_path, "Checkpoint file")->required();
  auto* url_opt = predict->add_option("--url", predict_args.url, "One URL to score");
  predict->add_option("--input", predict_args.input_path, "File with one URL per line")
      ->excludes(url_opt);

  urlformer::EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Confusion matrix and metrics on a labeled TSV");
  evaluate->add_option("--checkpoint", eval_args.checkpoint_path, "Checkpoint file")->required();
  evaluate->add_option("--data", eval_args.data_tsv, "Labeled <label>\\t<url> TSV")->required();
  evaluate->add_option("--out", eval_args.out_dir, "Directory for report.csv and confusion.csv");

  urlformer::TokenizeArgs tok_args;
  auto* tokenize = app.add_subcommand("tokenize", "Print the 256-length id encoding of a URL");
  tokenize->add_option("--vocab", tok_args.vocab_path, "Vocabulary TSV")->required();
  tokenize->add_option("--url", tok_args.url, "URL to encode")->required();

  urlformer::BuildVocabArgs vocab_args;
  auto* build_vocab = app.add_subcommand("build-vocab", "Build a character vocabulary from URLs");
  build_vocab->add_option("--malicious", vocab_args.malicious_csv, "Malicious CSV export");
  build_vocab->add_option("--benign", vocab_args.benign_list, "Benign URL list");
  build_vocab->add_option("--data", vocab_args.dataset_tsv, "Labeled dataset TSV");
  build_vocab->add_option("--out", vocab_args.out_path, "Output vocabulary TSV")->required();
  build_vocab->add_option("--max-size", vocab_args.max_size, "Vocabulary size cap (3..256)");

  urlformer::PlotArgs plot_args;
  auto* plot = app.add_subcommand("plot", "Render accuracy.svg and loss.svg from a history CSV");
  plot->add_option("--history", plot_args.history_path, "history.csv from a training run")
      ->required();
  plot->add_option("--out", plot_args.out_dir, "Output directory");

  urlformer::CompareArgs compare_args;
  auto* compare = app.add_subcommand("compare", "Rank models from a metrics CSV");
  compare->add_option("--metrics", compare_args.metrics_csv,
                      "CSV: model,accuracy,precision,recall,f1 (NA allowed)")
      ->required();
  compare->add_option("--out", compare_args.out_dir, "Directory for the ranked report.csv");

  std::string serve_checkpoint, serve_host = "127.0.0.1";
  int serve_port = 8080;
  auto* serve = app.add_subcommand("serve", "HTTP scoring service (/score, /health)");
  serve->add_option("--checkpoint", serve_checkpoint, "Checkpoint file")->required();
  serve->add_option("--host", serve_host, "Bind address");
  serve->add_option("--port", serve_port, "TCP port")->check(CLI::Range(1, 65535));

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) {
    train_args.seed = seed;
    return urlformer::cmd_train(train_args, std::cout, std::cerr);
  }
  if (predict->parsed()) return urlformer::cmd_predict(predict_args, std::cout, std::cerr);
  if (evaluate->parsed()) return urlformer::cmd_evaluate(eval_args, std::cout, std::cerr);
  if (tokenize->parsed()) return urlformer::cmd_tokenize(tok_args, std::cout, std::cerr);
  if (build_vocab->parsed()) return urlformer::cmd_build_vocab(vocab_args, std::cout, std::cerr);
  if (plot->parsed()) return urlformer::cmd_plot(plot_args, std::cout, std::cerr);
  if (compare->parsed()) return urlformer::cmd_compare(compare_args, std::cout, std::cerr);
  if (serve->parsed()) {
    return urlformer::run_server(serve_checkpoint, serve_host, serve_port, std::cout, std::cerr);
  }
  return 0;
}
