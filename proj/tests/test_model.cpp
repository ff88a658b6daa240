#include <cmath>
#include <vector>

#include "doctest.h"
#include "testutil.hpp"
#include "urlformer/errors.hpp"
#include "urlformer/model.hpp"
#include "urlformer/ops.hpp"

using namespace urlformer;
using doctest::Approx;

namespace {

HyperParams tiny_hp() {
  HyperParams hp;
  hp.max_len = 3;
  hp.vocab_size = 6;
  hp.d_model = 4;
  hp.heads = 2;
  hp.ffn_hidden = 5;
  hp.head_hidden = 4;
  return hp;
}

std::vector<std::uint16_t> random_ids(const HyperParams& hp, std::size_t batch, Rng& rng) {
  std::vector<std::uint16_t> ids(batch * hp.max_len);
  for (auto& id : ids) id = std::uint16_t(rng.uniform_index(hp.vocab_size));
  return ids;
}

}  // namespace

TEST_CASE("hyperparameter validation") {
  HyperParams hp;
  hp.validate();
  CHECK(hp.d_k() == 64);

  hp.d_model = 250;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  hp = HyperParams{};
  hp.vocab_size = 300;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  hp = HyperParams{};
  hp.dropout = 1.0f;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  CHECK_THROWS_AS(init_model<float>(hp, 1), ConfigError);
}

TEST_CASE("default parameter count is pinned") {
  auto p = init_model<float>(HyperParams{}, 1);
  CHECK(p.parameter_count() == 476738);

  // Recomputed from the documented shapes.
  const std::size_t d = 256, v = 256, L = 256, f = 128, hh = 64, c = 2;
  const std::size_t expect = v * d + L * d + 4 * d * d + d * f + f + f * d + d + 4 * d +
                             d * hh + hh + hh * c + c;
  CHECK(p.parameter_count() == expect);
  CHECK(p.named_tensors().size() == 18);
}

TEST_CASE("initialization is seed-deterministic and bounded") {
  auto hp = tiny_hp();
  auto a = init_model<float>(hp, 11);
  auto b = init_model<float>(hp, 11);
  auto c = init_model<float>(hp, 12);

  bool all_same = true, any_diff = false;
  auto an = a.named_tensors(), bn = b.named_tensors(), cn = c.named_tensors();
  for (std::size_t t = 0; t < an.size(); ++t) {
    for (std::size_t i = 0; i < an[t].second->numel(); ++i) {
      all_same = all_same && an[t].second->at(i) == bn[t].second->at(i);
      any_diff = any_diff || an[t].second->at(i) != cn[t].second->at(i);
    }
  }
  CHECK(all_same);
  CHECK(any_diff);

  for (auto& [name, t] : an) {
    if (t->rank() == 2) {
      const float bound = float(std::sqrt(6.0 / double(t->extent(0) + t->extent(1))));
      for (std::size_t i = 0; i < t->numel(); ++i) {
        CHECK(std::fabs(t->at(i)) <= bound);
      }
    }
  }
  for (std::size_t i = 0; i < hp.d_model; ++i) {
    CHECK(a.ln1_gamma.at(i) == 1.0f);
    CHECK(a.ln1_beta.at(i) == 0.0f);
    CHECK(a.ln2_gamma.at(i) == 1.0f);
    CHECK(a.ln2_beta.at(i) == 0.0f);
  }
  for (std::size_t i = 0; i < hp.ffn_hidden; ++i) CHECK(a.ffn_b1.at(i) == 0.0f);
  CHECK(a.out_b.at(0) == 0.0f);
}

TEST_CASE("forward shape, normalization and purity") {
  auto hp = tiny_hp();
  auto params = init_model<float>(hp, 5);
  Rng data_rng(9);
  auto ids = random_ids(hp, 4, data_rng);

  Rng r1(0), r2(0);
  GraphT<float> g1(false), g2(false);
  auto f1 = model_forward(g1, params, ids, 4, false, r1);
  auto f2 = model_forward(g2, params, ids, 4, false, r2);

  CHECK(f1.probs->t.shape() == Shape{4, 2});
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(f1.probs->t.at(i, 0) + f1.probs->t.at(i, 1) == Approx(1.0).epsilon(1e-6));
    CHECK(f1.probs->t.at(i, 0) >= 0.0f);
  }
  for (std::size_t i = 0; i < 8; ++i) CHECK(f1.probs->t.at(i) == f2.probs->t.at(i));
}

TEST_CASE("identical sequences yield identical rows and batch order is inert") {
  auto hp = tiny_hp();
  auto params = init_model<float>(hp, 6);
  Rng data_rng(10);
  auto one = random_ids(hp, 1, data_rng);
  auto two = random_ids(hp, 1, data_rng);

  std::vector<std::uint16_t> batch;
  batch.insert(batch.end(), one.begin(), one.end());
  batch.insert(batch.end(), two.begin(), two.end());
  batch.insert(batch.end(), one.begin(), one.end());

  Rng r(0);
  GraphT<float> g(false);
  auto fwd = model_forward(g, params, batch, 3, false, r);
  CHECK(fwd.probs->t.at(0, 0) == fwd.probs->t.at(2, 0));
  CHECK(fwd.probs->t.at(0, 1) == fwd.probs->t.at(2, 1));

  GraphT<float> gs(false);
  auto solo = model_forward(gs, params, two, 1, false, r);
  CHECK(fwd.probs->t.at(1, 0) == Approx(solo.probs->t.at(0, 0)).epsilon(1e-6));
  CHECK(fwd.probs->t.at(1, 1) == Approx(solo.probs->t.at(0, 1)).epsilon(1e-6));
}

TEST_CASE("forward rejects out-of-range ids and bad batch sizes") {
  auto hp = tiny_hp();
  auto params = init_model<float>(hp, 7);
  Rng r(0);
  GraphT<float> g(false);
  std::vector<std::uint16_t> ids(hp.max_len, std::uint16_t(hp.vocab_size));
  CHECK_THROWS_AS(model_forward(g, params, ids, 1, false, r), DataError);
  CHECK_THROWS_AS(model_forward(g, params, ids, 2, false, r), DimensionError);
}

TEST_CASE("untrained model has no strong class bias") {
  HyperParams hp = tiny_hp();
  hp.d_model = 8;
  hp.heads = 2;
  auto params = init_model<float>(hp, 2024);
  Rng data_rng(77), r(0);
  double mean_p1 = 0;
  GraphT<float> g(false);
  auto ids = random_ids(hp, 100, data_rng);
  auto fwd = model_forward(g, params, ids, 100, false, r);
  for (std::size_t i = 0; i < 100; ++i) mean_p1 += fwd.probs->t.at(i, 1);
  mean_p1 /= 100;
  CHECK(mean_p1 > 0.3);
  CHECK(mean_p1 < 0.7);
}

TEST_CASE("encoder block keeps shape and inference determinism") {
  auto hp = tiny_hp();
  auto params = init_model<float>(hp, 8);
  Rng rng(1);
  for (std::size_t L : {1, 2, 7}) {
    auto x = testutil::random_tensor<float>({L, hp.d_model}, rng);
    Rng d1(0), d2(0);
    auto y1 = encoder_block(params, x, false, d1);
    auto y2 = encoder_block(params, x, false, d2);
    CHECK(y1.shape() == x.shape());
    for (std::size_t i = 0; i < y1.numel(); ++i) CHECK(y1.at(i) == y2.at(i));
  }
  CHECK_THROWS_AS(
      encoder_block(params, Tensor::zeros(Shape{2, hp.d_model + 1}), false, rng),
      DimensionError);
}

TEST_CASE("encoder block matches a scalar-by-scalar oracle") {
  HyperParams hp;
  hp.max_len = 2;
  hp.vocab_size = 3;
  hp.d_model = 2;
  hp.heads = 1;
  hp.ffn_hidden = 3;
  hp.head_hidden = 2;
  auto params = init_model<double>(hp, 1);
  params.wq = TensorT<double>::matrix({{1, 0}, {0, 1}});
  params.wk = TensorT<double>::matrix({{0, 1}, {1, 0}});
  params.wv = TensorT<double>::matrix({{1, 1}, {0, 1}});
  params.wo = TensorT<double>::matrix({{0.5, 0}, {0, 0.5}});
  params.ffn_w1 = TensorT<double>::matrix({{1, 0, -1}, {0, 1, 1}});
  params.ffn_b1 = TensorT<double>::vector({0.1, -0.2, 0});
  params.ffn_w2 = TensorT<double>::matrix({{1, 0}, {0, 1}, {0.5, -0.5}});
  params.ffn_b2 = TensorT<double>::vector({0.05, -0.05});
  params.ln1_gamma = TensorT<double>::vector({1.2, 0.8});
  params.ln1_beta = TensorT<double>::vector({0.1, -0.1});
  params.ln2_gamma = TensorT<double>::vector({1, 1});
  params.ln2_beta = TensorT<double>::vector({0, 0});

  const double x[2][2] = {{0.3, -0.7}, {1.1, 0.4}};

  // Oracle: explicit arithmetic, no library calls.
  double q[2][2], k[2][2], v[2][2];
  for (int i = 0; i < 2; ++i) {
    q[i][0] = x[i][0] * 1 + x[i][1] * 0;
    q[i][1] = x[i][0] * 0 + x[i][1] * 1;
    k[i][0] = x[i][0] * 0 + x[i][1] * 1;
    k[i][1] = x[i][0] * 1 + x[i][1] * 0;
    v[i][0] = x[i][0] * 1 + x[i][1] * 0;
    v[i][1] = x[i][0] * 1 + x[i][1] * 1;
  }
  double att[2][2];
  for (int i = 0; i < 2; ++i) {
    const double s0 = (q[i][0] * k[0][0] + q[i][1] * k[0][1]) / std::sqrt(2.0);
    const double s1 = (q[i][0] * k[1][0] + q[i][1] * k[1][1]) / std::sqrt(2.0);
    const double m = s0 > s1 ? s0 : s1;
    const double e0 = std::exp(s0 - m), e1 = std::exp(s1 - m);
    const double p0 = e0 / (e0 + e1), p1 = e1 / (e0 + e1);
    const double h0 = p0 * v[0][0] + p1 * v[1][0];
    const double h1 = p0 * v[0][1] + p1 * v[1][1];
    att[i][0] = h0 * 0.5;
    att[i][1] = h1 * 0.5;
  }
  double y1[2][2];
  for (int i = 0; i < 2; ++i) {
    const double r0 = x[i][0] + att[i][0], r1 = x[i][1] + att[i][1];
    const double mean = (r0 + r1) / 2;
    const double var = ((r0 - mean) * (r0 - mean) + (r1 - mean) * (r1 - mean)) / 2;
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    y1[i][0] = (r0 - mean) * inv * 1.2 + 0.1;
    y1[i][1] = (r1 - mean) * inv * 0.8 - 0.1;
  }
  double y2[2][2];
  for (int i = 0; i < 2; ++i) {
    const double h0 = std::max(0.0, y1[i][0] * 1 + y1[i][1] * 0 + 0.1);
    const double h1 = std::max(0.0, y1[i][0] * 0 + y1[i][1] * 1 - 0.2);
    const double h2 = std::max(0.0, y1[i][0] * -1 + y1[i][1] * 1 + 0.0);
    const double f0 = h0 * 1 + h1 * 0 + h2 * 0.5 + 0.05;
    const double f1 = h0 * 0 + h1 * 1 + h2 * -0.5 - 0.05;
    const double r0 = y1[i][0] + f0, r1 = y1[i][1] + f1;
    const double mean = (r0 + r1) / 2;
    const double var = ((r0 - mean) * (r0 - mean) + (r1 - mean) * (r1 - mean)) / 2;
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    y2[i][0] = (r0 - mean) * inv;
    y2[i][1] = (r1 - mean) * inv;
  }

  Rng rng(0);
  auto got = encoder_block(
      params, TensorT<double>::matrix({{x[0][0], x[0][1]}, {x[1][0], x[1][1]}}), false, rng);
  for (int i = 0; i < 2; ++i) {
    CHECK(got.at(i, 0) == Approx(y2[i][0]).epsilon(1e-9));
    CHECK(got.at(i, 1) == Approx(y2[i][1]).epsilon(1e-9));
  }
}

TEST_CASE("predict scores and labels agree") {
  auto hp = tiny_hp();
  hp.max_len = 16;
  auto params = init_model<float>(hp, 3);
  auto vocab = build_vocab({"http://example.com/abc"}, hp.vocab_size);

  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    std::string url = "http://";
    for (int j = 0; j < 12; ++j) url += char('a' + rng.uniform_index(26));
    auto pred = predict(params, vocab, url);
    CHECK(pred.score >= 0.0f);
    CHECK(pred.score <= 1.0f);
    CHECK(pred.label == (pred.score >= 0.5f ? 1 : 0));
  }

  std::vector<std::string> urls = {"http://a.example/one", "http://b.example/two",
                                   "http://c.example/three"};
  auto batched = predict_batch(params, vocab, urls, 2);
  REQUIRE(batched.size() == 3);
  for (std::size_t i = 0; i < urls.size(); ++i) {
    auto single = predict(params, vocab, urls[i]);
    CHECK(batched[i].score == Approx(single.score).epsilon(1e-6));
    CHECK(batched[i].label == single.label);
  }
}

TEST_CASE("whole classifier passes a finite-difference check") {
  auto hp = tiny_hp();
  auto params = init_model<double>(hp, 21);
  Rng data_rng(5);
  std::vector<std::uint16_t> ids;
  for (std::size_t i = 0; i < 2 * hp.max_len; ++i) {
    ids.push_back(std::uint16_t(data_rng.uniform_index(hp.vocab_size)));
  }
  const std::vector<int> labels{1, 0};

  auto loss_of = [&]() {
    GraphT<double> g(false);
    Rng r(0);
    auto fwd = model_forward(g, params, ids, 2, false, r);
    return cross_entropy(fwd.probs->t, labels);
  };

  GraphT<double> g(true);
  Rng r(0);
  auto fwd = model_forward(g, params, ids, 2, false, r);
  g.backward(g.cross_entropy(fwd.probs, labels));

  double worst = 0;
  auto tensors = params.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    const auto& leaf = fwd.param_leaves[t];
    for (std::size_t i = 0; i < tensors[t]->numel(); ++i) {
      const double keep = tensors[t]->at(i);
      const double h = 1e-5;
      tensors[t]->at(i) = keep + h;
      const double fp = loss_of();
      tensors[t]->at(i) = keep - h;
      const double fm = loss_of();
      tensors[t]->at(i) = keep;
      const double fd = (fp - fm) / (2 * h);
      const double an = leaf->t.has_grad() ? leaf->t.grad()[i] : 0.0;
      const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-6});
      worst = std::max(worst, std::fabs(fd - an) / denom);
    }
  }
  CHECK(worst < 1e-3);
}
