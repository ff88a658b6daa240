#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace urlformer {

// Operator commands behind the CLI, stream-parameterized so tests can run
// them in-process. Exit codes: 0 success, 2 configuration or artifact
// problems, 3 data or I/O problems, 4 training divergence.

struct TrainArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;  // overrides training.seed
  std::string out_dir;                // overrides out_dir
};
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);

struct PredictArgs {
  std::string checkpoint_path;
  std::string url;         // exactly one of url/input_path
  std::string input_path;  // one URL per line
};
int cmd_predict(const PredictArgs& args, std::ostream& out, std::ostream& err);

struct EvaluateArgs {
  std::string checkpoint_path;
  std::string data_tsv;
  std::string out_dir = ".";
};
int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err);

struct TokenizeArgs {
  std::string vocab_path;
  std::string url;
};
int cmd_tokenize(const TokenizeArgs& args, std::ostream& out, std::ostream& err);

struct BuildVocabArgs {
  std::string malicious_csv;
  std::string benign_list;
  std::string dataset_tsv;
  std::string out_path;
  std::size_t max_size = 256;
};
int cmd_build_vocab(const BuildVocabArgs& args, std::ostream& out, std::ostream& err);

struct PlotArgs {
  std::string history_path;
  std::string out_dir = ".";
};
int cmd_plot(const PlotArgs& args, std::ostream& out, std::ostream& err);

struct CompareArgs {
  std::string metrics_csv;  // model,accuracy,precision,recall,f1 with NA allowed
  std::string out_dir;      // empty: print only
};
int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err);

}  // namespace urlformer
