#include <cstring>
#include <string>

#include "doctest.h"
#include "testutil.hpp"
#include "urlformer/checkpoint.hpp"
#include "urlformer/errors.hpp"
#include "urlformer/sha256.hpp"

using namespace urlformer;

namespace {

Checkpoint sample_checkpoint() {
  HyperParams hp;
  hp.max_len = 24;
  hp.vocab_size = 32;
  hp.d_model = 8;
  hp.heads = 2;
  hp.ffn_hidden = 6;
  hp.head_hidden = 5;

  Checkpoint ckpt;
  ckpt.epoch = 7;
  ckpt.seed = 42;
  for (std::size_t i = 0; i < 32; ++i) ckpt.config_digest[i] = (unsigned char)(i * 3 + 1);
  ckpt.vocab = build_vocab({"http://example.com/a?b=1", "https://test.example.net/xyz"}, 32);
  ckpt.params = init_model<float>(hp, 99);
  return ckpt;
}

// Re-signs a tampered body so structural checks run instead of the digest check.
std::string resign(std::string body_and_digest) {
  const std::size_t body = body_and_digest.size() - 32;
  const auto digest = Sha256::digest(body_and_digest.data(), body);
  std::memcpy(body_and_digest.data() + body, digest.data(), 32);
  return body_and_digest;
}

}  // namespace

TEST_CASE("checkpoint bytes round trip every field bit-exactly") {
  const Checkpoint ckpt = sample_checkpoint();
  const std::string bytes = checkpoint_to_bytes(ckpt);
  const Checkpoint back = checkpoint_from_bytes(bytes);

  CHECK(back.version == 1);
  CHECK(back.epoch == ckpt.epoch);
  CHECK(back.seed == ckpt.seed);
  CHECK(back.config_digest == ckpt.config_digest);
  CHECK(back.vocab == ckpt.vocab);
  CHECK(back.params.hp == ckpt.params.hp);

  auto a = ckpt.params.named_tensors();
  auto b = back.params.named_tensors();
  REQUIRE(a.size() == b.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    REQUIRE(a[t].second->shape() == b[t].second->shape());
    for (std::size_t i = 0; i < a[t].second->numel(); ++i) {
      CHECK(a[t].second->at(i) == b[t].second->at(i));
    }
  }

  CHECK(checkpoint_to_bytes(back) == bytes);
}

TEST_CASE("checkpoint file round trip is byte-identical and rescoring matches") {
  testutil::TempDir tmp;
  const Checkpoint ckpt = sample_checkpoint();
  const std::string path = tmp.file("model.urlt");
  save_checkpoint(ckpt, path);

  std::string digest_hex;
  const Checkpoint back = load_checkpoint(path, &digest_hex);
  save_checkpoint(back, tmp.file("model2.urlt"));
  CHECK(testutil::read_file(path) == testutil::read_file(tmp.file("model2.urlt")));

  const std::string bytes = testutil::read_file(path);
  const auto recomputed = Sha256::digest(bytes.data(), bytes.size() - 32);
  CHECK(digest_hex == Sha256::hex(recomputed));

  const std::vector<std::string> urls = {
      "http://example.com/a?b=1", "https://test.example.net/xyz", "http://phish.example/login",
      "https://a.example/",       "http://b.example/path/path",   "https://c.example/?q=zz",
      "http://d.example/abcdef",  "https://e.example/1",          "http://f.example/2",
      "https://g.example/3"};
  const auto before = predict_batch(ckpt.params, ckpt.vocab, urls);
  const auto after = predict_batch(back.params, back.vocab, urls);
  for (std::size_t i = 0; i < urls.size(); ++i) {
    CHECK(before[i].score == after[i].score);
    CHECK(before[i].label == after[i].label);
  }
}

TEST_CASE("checkpoint rejects damage by failure class") {
  const Checkpoint ckpt = sample_checkpoint();
  const std::string bytes = checkpoint_to_bytes(ckpt);

  SUBCASE("wrong magic is a format error") {
    std::string bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(checkpoint_from_bytes(bad), FormatError);
  }
  SUBCASE("unknown version is a format error") {
    std::string bad = bytes;
    bad[4] = 2;
    CHECK_THROWS_AS(checkpoint_from_bytes(bad), FormatError);
  }
  SUBCASE("truncation ahead of the digest is an I/O error") {
    CHECK_THROWS_AS(checkpoint_from_bytes(bytes.substr(0, 3)), IoError);
    CHECK_THROWS_AS(checkpoint_from_bytes(bytes.substr(0, 5)), IoError);
    CHECK_THROWS_AS(checkpoint_from_bytes(bytes.substr(0, 20)), IoError);
  }
  SUBCASE("payload damage is a corruption error") {
    std::string bad = bytes;
    bad[bytes.size() / 2] = char(bad[bytes.size() / 2] ^ 0x40);
    CHECK_THROWS_AS(checkpoint_from_bytes(bad), CorruptionError);
  }
  SUBCASE("shortened body with intact tail is a corruption error") {
    CHECK_THROWS_AS(checkpoint_from_bytes(bytes.substr(0, bytes.size() - 40)), CorruptionError);
  }
  SUBCASE("re-signed tensor name tampering is a format error") {
    std::string bad = bytes;
    const std::size_t at = bad.find("token_embedding");
    REQUIRE(at != std::string::npos);
    bad[at] = 'z';
    CHECK_THROWS_AS(checkpoint_from_bytes(resign(bad)), FormatError);
  }
  SUBCASE("re-signed trailing garbage is a format error") {
    std::string bad = bytes.substr(0, bytes.size() - 32) + std::string(8, '\0') +
                      bytes.substr(bytes.size() - 32);
    CHECK_THROWS_AS(checkpoint_from_bytes(resign(bad)), FormatError);
  }
}

TEST_CASE("checkpoint load failures on missing files") {
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/path/model.urlt"), IoError);
}
