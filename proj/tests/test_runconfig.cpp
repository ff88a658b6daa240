#include "doctest.h"
#include "testutil.hpp"
#include "urlformer/errors.hpp"
#include "urlformer/runconfig.hpp"

using namespace urlformer;
using doctest::Approx;

TEST_CASE("empty document resolves to the documented defaults") {
  const auto config = run_config_from_json("{}");
  CHECK(config.out_dir == ".");
  CHECK(config.data.per_class == 10000);
  CHECK(config.data.train_fraction == Approx(0.8));
  CHECK(config.data.dedup == true);
  CHECK(config.training.batch_size == 512);
  CHECK(config.training.epochs == 20);
  CHECK(config.training.adam.learning_rate == 1e-3f);
  CHECK(config.training.adam.beta1 == 0.9f);
  CHECK(config.training.adam.beta2 == 0.999f);
  CHECK(config.training.seed == 0);
  CHECK(config.training.hp.max_len == 256);
  CHECK(config.training.hp.vocab_size == 256);
  CHECK(config.training.hp.d_model == 256);
  CHECK(config.training.hp.heads == 4);
  CHECK(config.training.hp.ffn_hidden == 128);
  CHECK(config.training.hp.head_hidden == 64);
  CHECK(config.training.hp.dropout == 0.1f);
  CHECK(config.training.hp.causal == false);
}

TEST_CASE("explicit fields override defaults") {
  const std::string text = R"({
    "out_dir": "runs/a",
    "data": {"malicious_csv": "m.csv", "benign_list": "b.txt", "per_class": 50,
             "train_fraction": 0.75, "dedup": false},
    "model": {"d_model": 64, "heads": 8, "max_len": 128, "dropout": 0.2},
    "training": {"batch_size": 16, "epochs": 3, "learning_rate": 0.01, "seed": 9,
                 "deterministic_time": true}
  })";
  const auto config = run_config_from_json(text);
  CHECK(config.out_dir == "runs/a");
  CHECK(config.data.malicious_csv == "m.csv");
  CHECK(config.data.per_class == 50);
  CHECK(config.data.train_fraction == Approx(0.75));
  CHECK(config.data.dedup == false);
  CHECK(config.training.hp.d_model == 64);
  CHECK(config.training.hp.heads == 8);
  CHECK(config.training.hp.max_len == 128);
  CHECK(config.training.hp.dropout == Approx(0.2f));
  CHECK(config.training.batch_size == 16);
  CHECK(config.training.epochs == 3);
  CHECK(config.training.adam.learning_rate == Approx(0.01f));
  CHECK(config.training.seed == 9);
  CHECK(config.training.deterministic_time == true);
  config.validate();
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_AS(run_config_from_json(R"({"outdir": "x"})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"data": {"benign": "x"}})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"model": {"layers": 2}})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"training": {"momentum": 0.9}})"), ConfigError);
}

TEST_CASE("type mismatches are rejected") {
  CHECK_THROWS_AS(run_config_from_json(R"({"training": {"batch_size": "big"}})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"training": {"batch_size": -4}})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"training": {"seed": -1}})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"training": {"learning_rate": true}})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"model": {"d_model": 2.5}})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"data": {"dedup": 1}})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"out_dir": 7})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json("[1,2]"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json("{"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"model": {"d_model": 4294967296}})"), ConfigError);
}

TEST_CASE("validation enforces one data mode with sane parameters") {
  auto base = run_config_from_json("{}");
  CHECK_THROWS_AS(base.validate(), ConfigError);  // no sources at all

  auto presplit = base;
  presplit.data.train_tsv = "train.tsv";
  CHECK_THROWS_AS(presplit.validate(), ConfigError);  // missing test_tsv
  presplit.data.test_tsv = "test.tsv";
  presplit.validate();
  presplit.data.malicious_csv = "m.csv";
  CHECK_THROWS_AS(presplit.validate(), ConfigError);  // both modes

  auto raw = base;
  raw.data.malicious_csv = "m.csv";
  raw.data.benign_list = "b.txt";
  raw.validate();
  raw.data.train_fraction = 1.0;
  CHECK_THROWS_AS(raw.validate(), ConfigError);
  raw.data.train_fraction = 0.8;
  raw.data.per_class = 0;
  CHECK_THROWS_AS(raw.validate(), ConfigError);
}

TEST_CASE("resolved echo parses back to the same configuration") {
  const std::string text = R"({
    "out_dir": "runs/echo",
    "data": {"train_tsv": "tr.tsv", "test_tsv": "te.tsv"},
    "model": {"d_model": 32, "heads": 4},
    "training": {"epochs": 5, "seed": 123}
  })";
  const auto config = run_config_from_json(text);
  const auto echoed = run_config_to_json(config);
  const auto back = run_config_from_json(echoed);

  CHECK(back.out_dir == config.out_dir);
  CHECK(back.data.train_tsv == config.data.train_tsv);
  CHECK(back.data.test_tsv == config.data.test_tsv);
  CHECK(back.data.per_class == config.data.per_class);
  CHECK(back.data.train_fraction == config.data.train_fraction);
  CHECK(back.training.hp == config.training.hp);
  CHECK(back.training.batch_size == config.training.batch_size);
  CHECK(back.training.epochs == config.training.epochs);
  CHECK(back.training.seed == config.training.seed);
  CHECK(back.training.adam.learning_rate == config.training.adam.learning_rate);
  CHECK(back.training.adam.beta1 == config.training.adam.beta1);
  CHECK(back.training.adam.beta2 == config.training.adam.beta2);
  CHECK(back.training.adam.eps == config.training.adam.eps);
  CHECK(back.training.deterministic_time == config.training.deterministic_time);

  // Echoing again is a fixed point.
  CHECK(run_config_to_json(back) == echoed);
}

TEST_CASE("config files load through the same path") {
  testutil::TempDir tmp;
  testutil::write_file(tmp.file("run.json"), R"({"training": {"epochs": 2}})");
  const auto config = load_run_config(tmp.file("run.json"));
  CHECK(config.training.epochs == 2);
  CHECK_THROWS_AS(load_run_config(tmp.file("missing.json")), IoError);
}
