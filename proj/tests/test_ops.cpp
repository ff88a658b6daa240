#include <cmath>
#include <vector>

#include "doctest.h"
#include "testutil.hpp"
#include "urlformer/errors.hpp"
#include "urlformer/ops.hpp"

using namespace urlformer;
using doctest::Approx;

namespace {

// Independent naive triple-loop product, kept deliberately different from
// the library's loop order.
Tensor matmul_oracle(const Tensor& a, const Tensor& b) {
  Tensor c(Shape{a.extent(0), b.extent(1)});
  for (std::size_t i = 0; i < a.extent(0); ++i) {
    for (std::size_t j = 0; j < b.extent(1); ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < a.extent(1); ++l) acc += double(a.at(i, l)) * double(b.at(l, j));
      c.at(i, j) = float(acc);
    }
  }
  return c;
}

}  // namespace

TEST_CASE("matmul identity and zero") {
  auto eye = Tensor::matrix({{1, 0}, {0, 1}});
  auto b = Tensor::matrix({{5, 6}, {7, 8}});
  auto r = matmul(eye, b);
  for (std::size_t i = 0; i < 4; ++i) CHECK(r.at(i) == b.at(i));

  auto az = matmul(b, Tensor::zeros(Shape{2, 3}));
  CHECK(az.shape() == Shape{2, 3});
  for (std::size_t i = 0; i < az.numel(); ++i) CHECK(az.at(i) == 0.0f);
}

TEST_CASE("matmul against naive oracle") {
  auto a = Tensor::matrix({{1, 2}, {3, 4}});
  auto b = Tensor::matrix({{5, 6}, {7, 8}});
  auto r = matmul(a, b);
  CHECK(r.at(0, 0) == 19.0f);
  CHECK(r.at(0, 1) == 22.0f);
  CHECK(r.at(1, 0) == 43.0f);
  CHECK(r.at(1, 1) == 50.0f);

  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + rng.uniform_index(6), k = 1 + rng.uniform_index(6),
                      n = 1 + rng.uniform_index(6);
    auto x = testutil::random_tensor<float>({m, k}, rng, 2.0);
    auto y = testutil::random_tensor<float>({k, n}, rng, 2.0);
    auto got = matmul(x, y);
    auto want = matmul_oracle(x, y);
    for (std::size_t i = 0; i < got.numel(); ++i) CHECK(got.at(i) == Approx(want.at(i)).epsilon(1e-5));
  }
}

TEST_CASE("matmul shape errors name both shapes") {
  auto a = Tensor::zeros(Shape{2, 3});
  auto b = Tensor::zeros(Shape{4, 2});
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2x3]"), DimensionError);
  try {
    matmul(a, b);
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("[4x2]") != std::string::npos);
  }
  CHECK_THROWS_AS(matmul(Tensor::vector({1, 2}), a), DimensionError);
}

TEST_CASE("matmul associativity on random chains") {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    auto a = testutil::random_tensor<float>({3, 3}, rng);
    auto b = testutil::random_tensor<float>({3, 3}, rng);
    auto c = testutil::random_tensor<float>({3, 3}, rng);
    auto left = matmul(matmul(a, b), c);
    auto right = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < 9; ++i) CHECK(std::fabs(left.at(i) - right.at(i)) < 1e-4f);
  }
}

TEST_CASE("softmax analytic points") {
  auto r = softmax_rows(Tensor::vector({0, 0}));
  CHECK(r.at(0) == Approx(0.5));
  CHECK(r.at(1) == Approx(0.5));

  auto r2 = softmax_rows(Tensor::vector({std::log(1.0f), std::log(3.0f)}));
  CHECK(r2.at(0) == Approx(0.25));
  CHECK(r2.at(1) == Approx(0.75));

  auto r3 = softmax_rows(Tensor::vector({-123.0f}));
  CHECK(r3.at(0) == Approx(1.0));

  CHECK_THROWS_AS(softmax_rows(Tensor()), DimensionError);
}

TEST_CASE("softmax rows sum to one and shift invariance") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rows = 1 + rng.uniform_index(5), cols = 1 + rng.uniform_index(8);
    auto x = testutil::random_tensor<float>({rows, cols}, rng, 10.0);
    auto y = softmax_rows(x);
    for (std::size_t i = 0; i < rows; ++i) {
      double sum = 0;
      for (std::size_t j = 0; j < cols; ++j) {
        CHECK(y.at(i, j) >= 0.0f);
        sum += y.at(i, j);
      }
      CHECK(sum == Approx(1.0).epsilon(1e-6));
    }

    const float c = float(rng.uniform_symmetric(50.0));
    Tensor shifted = x;
    for (std::size_t i = 0; i < x.numel(); ++i) shifted.at(i) += c;
    auto ys = softmax_rows(shifted);
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(std::fabs(ys.at(i) - y.at(i)) < 1e-6f);
  }
}

TEST_CASE("attention single score and uniform weights") {
  auto q = Tensor::matrix({{0.3f, -1.2f}});
  auto k = Tensor::matrix({{2.0f, 0.5f}});
  auto v = Tensor::matrix({{3, 7}});
  auto out = scaled_dot_attention(q, k, v);
  CHECK(out.at(0, 0) == Approx(3.0));
  CHECK(out.at(0, 1) == Approx(7.0));

  auto qz = Tensor::zeros(Shape{3, 2});
  Rng rng(5);
  auto kk = testutil::random_tensor<float>({3, 2}, rng);
  auto vv = testutil::random_tensor<float>({3, 4}, rng);
  auto o = scaled_dot_attention(qz, kk, vv);
  for (std::size_t j = 0; j < 4; ++j) {
    const float mean = (vv.at(0, j) + vv.at(1, j) + vv.at(2, j)) / 3.0f;
    for (std::size_t i = 0; i < 3; ++i) CHECK(o.at(i, j) == Approx(mean).epsilon(1e-6));
  }
}

TEST_CASE("attention against brute-force oracle") {
  auto q = Tensor::matrix({{1}, {2}});
  auto k = Tensor::matrix({{1}, {0}});
  auto v = Tensor::matrix({{1, 0}, {0, 1}});
  auto out = scaled_dot_attention(q, k, v);

  // By hand: scores row 1 = [1, 0], softmax = [e/(1+e), 1/(1+e)].
  const double e1 = std::exp(1.0);
  CHECK(out.at(0, 0) == Approx(e1 / (1 + e1)).epsilon(1e-4));
  CHECK(out.at(0, 0) == Approx(0.7311).epsilon(1e-3));
  CHECK(out.at(0, 1) == Approx(0.2689).epsilon(1e-3));

  // Full brute-force recomputation on random inputs.
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t L = 1 + rng.uniform_index(5), dk = 1 + rng.uniform_index(4),
                      dv = 1 + rng.uniform_index(4);
    auto qq = testutil::random_tensor<float>({L, dk}, rng);
    auto kk = testutil::random_tensor<float>({L, dk}, rng);
    auto vv = testutil::random_tensor<float>({L, dv}, rng);
    auto got = scaled_dot_attention(qq, kk, vv);
    for (std::size_t i = 0; i < L; ++i) {
      std::vector<double> w(L);
      double wsum = 0;
      for (std::size_t j = 0; j < L; ++j) {
        double s = 0;
        for (std::size_t d = 0; d < dk; ++d) s += double(qq.at(i, d)) * double(kk.at(j, d));
        w[j] = std::exp(s / std::sqrt(double(dk)));
        wsum += w[j];
      }
      for (std::size_t d = 0; d < dv; ++d) {
        double acc = 0;
        for (std::size_t j = 0; j < L; ++j) acc += w[j] / wsum * double(vv.at(j, d));
        CHECK(got.at(i, d) == Approx(acc).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("attention output stays inside v column ranges") {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t L = 1 + rng.uniform_index(6), dk = 1 + rng.uniform_index(4),
                      dv = 1 + rng.uniform_index(4);
    auto q = testutil::random_tensor<float>({L, dk}, rng, 3.0);
    auto k = testutil::random_tensor<float>({L, dk}, rng, 3.0);
    auto v = testutil::random_tensor<float>({L, dv}, rng, 5.0);
    auto out = scaled_dot_attention(q, k, v);
    for (std::size_t d = 0; d < dv; ++d) {
      float lo = v.at(0, d), hi = v.at(0, d);
      for (std::size_t j = 1; j < L; ++j) {
        lo = std::min(lo, v.at(j, d));
        hi = std::max(hi, v.at(j, d));
      }
      for (std::size_t i = 0; i < L; ++i) {
        CHECK(out.at(i, d) >= lo - 1e-5f);
        CHECK(out.at(i, d) <= hi + 1e-5f);
      }
    }
  }
}

TEST_CASE("attention shape errors") {
  auto q = Tensor::zeros(Shape{2, 3});
  auto k = Tensor::zeros(Shape{2, 4});
  auto v = Tensor::zeros(Shape{2, 2});
  CHECK_THROWS_AS(scaled_dot_attention(q, k, v), DimensionError);
  CHECK_THROWS_AS(scaled_dot_attention(q, Tensor::zeros(Shape{3, 3}), Tensor::zeros(Shape{2, 2})),
                  DimensionError);
}

TEST_CASE("relu") {
  auto r = relu(Tensor::vector({-1, 0, 2}));
  CHECK(r.at(0) == 0.0f);
  CHECK(r.at(1) == 0.0f);
  CHECK(r.at(2) == 2.0f);

  auto neg = relu(Tensor::vector({-5, -0.25f, -100}));
  for (std::size_t i = 0; i < 3; ++i) CHECK(neg.at(i) == 0.0f);

  auto pos = Tensor::vector({0.5f, 7, 1e-4f});
  auto rp = relu(pos);
  for (std::size_t i = 0; i < 3; ++i) CHECK(rp.at(i) == pos.at(i));
}

TEST_CASE("layer_norm analytic points") {
  auto gamma = Tensor::vector({1, 1, 1});
  auto beta = Tensor::vector({4, 5, 6});
  auto out = layer_norm(Tensor::matrix({{2, 2, 2}}), gamma, beta);
  CHECK(out.at(0, 0) == Approx(4.0).epsilon(1e-4));
  CHECK(out.at(0, 1) == Approx(5.0).epsilon(1e-4));
  CHECK(out.at(0, 2) == Approx(6.0).epsilon(1e-4));

  // mean 2, biased variance 1: normalized values are -1 and 1 up to eps.
  auto g2 = Tensor::vector({1, 1});
  auto b2 = Tensor::vector({0, 0});
  auto o2 = layer_norm(Tensor::matrix({{1, 3}}), g2, b2);
  CHECK(o2.at(0, 0) == Approx(-1.0).epsilon(1e-4));
  CHECK(o2.at(0, 1) == Approx(1.0).epsilon(1e-4));

  CHECK_THROWS_AS(layer_norm(Tensor::matrix({{1, 3}}), g2, b2, 0.0f), ParameterError);
  CHECK_THROWS_AS(layer_norm(Tensor::matrix({{1, 3}}), Tensor::vector({1, 1, 1}), b2), DimensionError);
}

TEST_CASE("layer_norm normalizes rows") {
  Rng rng(51);
  auto x = testutil::random_tensor<float>({8, 16}, rng, 5.0);
  auto gamma = Tensor::full(Shape{16}, 1.0f);
  auto beta = Tensor::zeros(Shape{16});
  auto y = layer_norm(x, gamma, beta);
  for (std::size_t i = 0; i < 8; ++i) {
    double mean = 0, var = 0;
    for (std::size_t j = 0; j < 16; ++j) mean += y.at(i, j);
    mean /= 16;
    for (std::size_t j = 0; j < 16; ++j) var += (y.at(i, j) - mean) * (y.at(i, j) - mean);
    var /= 16;
    CHECK(std::fabs(mean) < 1e-5);
    CHECK(var == Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("dropout identity modes") {
  Rng rng(61);
  auto x = testutil::random_tensor<float>({4, 4}, rng);
  auto same1 = dropout(x, 0.0, true, rng);
  auto same2 = dropout(x, 0.5, false, rng);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    CHECK(same1.at(i) == x.at(i));
    CHECK(same2.at(i) == x.at(i));
  }
  CHECK_THROWS_AS(dropout(x, -0.1, true, rng), ParameterError);
  CHECK_THROWS_AS(dropout(x, 1.0, true, rng), ParameterError);
}

TEST_CASE("dropout keeps the expected fraction and rescales") {
  Rng rng(71);
  auto x = Tensor::full(Shape{100000}, 1.0f);
  auto y = dropout(x, 0.1, true, rng);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < y.numel(); ++i) {
    if (y.at(i) != 0.0f) {
      CHECK(y.at(i) == Approx(1.0f / 0.9f));
      ++kept;
    }
  }
  CHECK(double(kept) / double(y.numel()) == Approx(0.9).epsilon(0.012));
}

TEST_CASE("dropout is deterministic under a fixed seed") {
  auto x = Tensor::full(Shape{64}, 2.0f);
  Rng a(99), b(99);
  auto ya = dropout(x, 0.3, true, a);
  auto yb = dropout(x, 0.3, true, b);
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(ya.at(i) == yb.at(i));
}

TEST_CASE("mean_pool_time") {
  auto single = mean_pool_time(Tensor::matrix({{4, 5, 6}}));
  CHECK(single.shape() == Shape{3});
  CHECK(single.at(0) == 4.0f);
  CHECK(single.at(2) == 6.0f);

  auto m = mean_pool_time(Tensor::matrix({{1, 2}, {3, 4}}));
  CHECK(m.at(0) == Approx(2.0));
  CHECK(m.at(1) == Approx(3.0));

  auto rep = mean_pool_time(Tensor::matrix({{7, -2}, {7, -2}, {7, -2}}));
  CHECK(rep.at(0) == Approx(7.0));
  CHECK(rep.at(1) == Approx(-2.0));
}

TEST_CASE("cross_entropy analytic points") {
  CHECK(cross_entropy(Tensor::matrix({{1, 0}}), {0}) == Approx(0.0));
  CHECK(cross_entropy(Tensor::matrix({{0.5f, 0.5f}}), {1}) == Approx(std::log(2.0)).epsilon(1e-4));
  CHECK(cross_entropy(Tensor::matrix({{1, 0}, {0.5f, 0.5f}}), {0, 0}) ==
        Approx(std::log(2.0) / 2.0).epsilon(1e-4));
  CHECK(cross_entropy(Tensor::matrix({{1, 0}, {0.5f, 0.5f}}), {0, 0}) == Approx(0.3466).epsilon(1e-3));

  CHECK_THROWS_AS(cross_entropy(Tensor::matrix({{1, 0}}), {2}), DataError);
  CHECK_THROWS_AS(cross_entropy(Tensor::matrix({{1, 0}}), {0, 1}), UsageError);
}

TEST_CASE("elementwise helpers") {
  auto a = Tensor::matrix({{1, 2}, {3, 4}});
  auto b = Tensor::matrix({{10, 20}, {30, 40}});
  auto s = add(a, b);
  CHECK(s.at(1, 1) == 44.0f);
  CHECK_THROWS_AS(add(a, Tensor::zeros(Shape{2, 3})), DimensionError);

  auto br = add_row_broadcast(a, Tensor::vector({100, 200}));
  CHECK(br.at(0, 0) == 101.0f);
  CHECK(br.at(1, 1) == 204.0f);
  CHECK_THROWS_AS(add_row_broadcast(a, Tensor::vector({1, 2, 3})), DimensionError);

  auto sc = scale(a, 0.5f);
  CHECK(sc.at(0, 1) == 1.0f);
}

TEST_CASE("ops are bitwise deterministic") {
  Rng r1(123), r2(123);
  auto a1 = testutil::random_tensor<float>({7, 9}, r1);
  auto b1 = testutil::random_tensor<float>({9, 5}, r1);
  auto a2 = testutil::random_tensor<float>({7, 9}, r2);
  auto b2 = testutil::random_tensor<float>({9, 5}, r2);
  auto m1 = matmul(a1, b1), m2 = matmul(a2, b2);
  for (std::size_t i = 0; i < m1.numel(); ++i) CHECK(m1.at(i) == m2.at(i));
  auto s1 = softmax_rows(m1), s2 = softmax_rows(m2);
  for (std::size_t i = 0; i < s1.numel(); ++i) CHECK(s1.at(i) == s2.at(i));
}
