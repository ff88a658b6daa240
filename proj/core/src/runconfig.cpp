#include "urlformer/runconfig.hpp"

#include <fstream>
#include <limits>

#include "json.hpp"
#include "urlformer/errors.hpp"

namespace urlformer {
namespace {

using nlohmann::ordered_json;

void reject_unknown(const ordered_json& obj, const char* where,
                    std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) known = known || it.key() == key;
    if (!known) {
      throw ConfigError(std::string("unknown key \"") + it.key() + "\" in " + where);
    }
  }
}

const ordered_json* field(const ordered_json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

std::string as_string(const ordered_json& v, const char* name) {
  if (!v.is_string()) throw ConfigError(std::string(name) + " must be a string");
  return v.get<std::string>();
}

bool as_bool(const ordered_json& v, const char* name) {
  if (!v.is_boolean()) throw ConfigError(std::string(name) + " must be a boolean");
  return v.get<bool>();
}

double as_number(const ordered_json& v, const char* name) {
  if (!v.is_number()) throw ConfigError(std::string(name) + " must be a number");
  return v.get<double>();
}

std::uint64_t as_uint(const ordered_json& v, const char* name) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    throw ConfigError(std::string(name) + " must be a nonnegative integer");
  }
  if (v.is_number_integer() && v.get<std::int64_t>() < 0) {
    throw ConfigError(std::string(name) + " must be a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::uint32_t as_u32(const ordered_json& v, const char* name) {
  const std::uint64_t wide = as_uint(v, name);
  if (wide > std::numeric_limits<std::uint32_t>::max()) {
    throw ConfigError(std::string(name) + " is out of range");
  }
  return std::uint32_t(wide);
}

void parse_data(const ordered_json& obj, DataConfig& out) {
  if (!obj.is_object()) throw ConfigError("\"data\" must be an object");
  reject_unknown(obj, "\"data\"",
                 {"malicious_csv", "benign_list", "train_tsv", "test_tsv", "per_class",
                  "train_fraction", "dedup"});
  if (auto* v = field(obj, "malicious_csv")) out.malicious_csv = as_string(*v, "data.malicious_csv");
  if (auto* v = field(obj, "benign_list")) out.benign_list = as_string(*v, "data.benign_list");
  if (auto* v = field(obj, "train_tsv")) out.train_tsv = as_string(*v, "data.train_tsv");
  if (auto* v = field(obj, "test_tsv")) out.test_tsv = as_string(*v, "data.test_tsv");
  if (auto* v = field(obj, "per_class")) out.per_class = std::size_t(as_uint(*v, "data.per_class"));
  if (auto* v = field(obj, "train_fraction")) {
    out.train_fraction = as_number(*v, "data.train_fraction");
  }
  if (auto* v = field(obj, "dedup")) out.dedup = as_bool(*v, "data.dedup");
}

void parse_model(const ordered_json& obj, HyperParams& hp) {
  if (!obj.is_object()) throw ConfigError("\"model\" must be an object");
  reject_unknown(obj, "\"model\"",
                 {"max_len", "vocab_size", "d_model", "heads", "ffn_hidden", "head_hidden",
                  "dropout", "causal"});
  if (auto* v = field(obj, "max_len")) hp.max_len = as_u32(*v, "model.max_len");
  if (auto* v = field(obj, "vocab_size")) hp.vocab_size = as_u32(*v, "model.vocab_size");
  if (auto* v = field(obj, "d_model")) hp.d_model = as_u32(*v, "model.d_model");
  if (auto* v = field(obj, "heads")) hp.heads = as_u32(*v, "model.heads");
  if (auto* v = field(obj, "ffn_hidden")) hp.ffn_hidden = as_u32(*v, "model.ffn_hidden");
  if (auto* v = field(obj, "head_hidden")) hp.head_hidden = as_u32(*v, "model.head_hidden");
  if (auto* v = field(obj, "dropout")) hp.dropout = float(as_number(*v, "model.dropout"));
  if (auto* v = field(obj, "causal")) hp.causal = as_bool(*v, "model.causal");
}

void parse_training(const ordered_json& obj, TrainConfig& out) {
  if (!obj.is_object()) throw ConfigError("\"training\" must be an object");
  reject_unknown(obj, "\"training\"",
                 {"batch_size", "epochs", "learning_rate", "beta1", "beta2", "eps", "seed",
                  "deterministic_time"});
  if (auto* v = field(obj, "batch_size")) {
    out.batch_size = std::size_t(as_uint(*v, "training.batch_size"));
  }
  if (auto* v = field(obj, "epochs")) out.epochs = std::size_t(as_uint(*v, "training.epochs"));
  if (auto* v = field(obj, "learning_rate")) {
    out.adam.learning_rate = float(as_number(*v, "training.learning_rate"));
  }
  if (auto* v = field(obj, "beta1")) out.adam.beta1 = float(as_number(*v, "training.beta1"));
  if (auto* v = field(obj, "beta2")) out.adam.beta2 = float(as_number(*v, "training.beta2"));
  if (auto* v = field(obj, "eps")) out.adam.eps = float(as_number(*v, "training.eps"));
  if (auto* v = field(obj, "seed")) out.seed = as_uint(*v, "training.seed");
  if (auto* v = field(obj, "deterministic_time")) {
    out.deterministic_time = as_bool(*v, "training.deterministic_time");
  }
}

}  // namespace

void RunConfig::validate() const {
  training.validate();
  if (data.presplit()) {
    if (data.train_tsv.empty() || data.test_tsv.empty()) {
      throw ConfigError("presplit data needs both train_tsv and test_tsv");
    }
    if (!data.malicious_csv.empty() || !data.benign_list.empty()) {
      throw ConfigError("give either presplit TSVs or raw sources, not both");
    }
  } else {
    if (data.malicious_csv.empty() || data.benign_list.empty()) {
      throw ConfigError("raw data needs both malicious_csv and benign_list");
    }
    if (data.per_class < 1) throw ConfigError("data.per_class must be at least 1");
    if (!(data.train_fraction > 0.0 && data.train_fraction < 1.0)) {
      throw ConfigError("data.train_fraction must lie strictly between 0 and 1");
    }
  }
}

RunConfig run_config_from_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown(doc, "the config root", {"out_dir", "data", "model", "training"});

  RunConfig config;
  if (auto* v = field(doc, "out_dir")) config.out_dir = as_string(*v, "out_dir");
  if (auto* v = field(doc, "data")) parse_data(*v, config.data);
  if (auto* v = field(doc, "model")) parse_model(*v, config.training.hp);
  if (auto* v = field(doc, "training")) parse_training(*v, config.training);
  return config;
}

std::string run_config_to_json(const RunConfig& config) {
  ordered_json doc;
  doc["out_dir"] = config.out_dir;

  ordered_json data;
  data["malicious_csv"] = config.data.malicious_csv;
  data["benign_list"] = config.data.benign_list;
  data["train_tsv"] = config.data.train_tsv;
  data["test_tsv"] = config.data.test_tsv;
  data["per_class"] = config.data.per_class;
  data["train_fraction"] = config.data.train_fraction;
  data["dedup"] = config.data.dedup;
  doc["data"] = data;

  const HyperParams& hp = config.training.hp;
  ordered_json model;
  model["max_len"] = hp.max_len;
  model["vocab_size"] = hp.vocab_size;
  model["d_model"] = hp.d_model;
  model["heads"] = hp.heads;
  model["ffn_hidden"] = hp.ffn_hidden;
  model["head_hidden"] = hp.head_hidden;
  model["dropout"] = hp.dropout;
  model["causal"] = hp.causal;
  doc["model"] = model;

  ordered_json training;
  training["batch_size"] = config.training.batch_size;
  training["epochs"] = config.training.epochs;
  training["learning_rate"] = config.training.adam.learning_rate;
  training["beta1"] = config.training.adam.beta1;
  training["beta2"] = config.training.adam.beta2;
  training["eps"] = config.training.adam.eps;
  training["seed"] = config.training.seed;
  training["deterministic_time"] = config.training.deterministic_time;
  doc["training"] = training;

  return doc.dump(2) + "\n";
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path);
  return run_config_from_json(text);
}

}  // namespace urlformer
