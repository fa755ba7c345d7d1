#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "onda/rng.hpp"
#include "onda/tensor.hpp"

using namespace onda;

namespace {

// Independent oracle: plain triple loop, no shared code with matmul.
Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor out = Tensor::matrix(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t p = 0; p < a.cols(); ++p)
      for (std::size_t j = 0; j < b.cols(); ++j)
        out.at(i, j) += a.at(i, p) * b.at(p, j);
  return out;
}

Tensor identity(std::size_t n) {
  Tensor t = Tensor::matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

}  // namespace

TEST_CASE("matmul against hand values") {
  Tensor a = Tensor::from_rows({{1, 0}, {0, 1}});
  Tensor b = Tensor::from_rows({{3, 4}, {5, 6}});
  CHECK(matmul(a, b) == b);

  Tensor row = Tensor::from_rows({{1, 2}});
  Tensor col = Tensor::from_rows({{3}, {4}});
  Tensor prod = matmul(row, col);
  CHECK(prod.rows() == 1);
  CHECK(prod.cols() == 1);
  CHECK(prod.at(0, 0) == doctest::Approx(11.0));
}

TEST_CASE("matmul matches the triple-loop oracle") {
  RngStream rng(11);
  Tensor a = gaussian_sample(rng, {8, 8});
  Tensor b = gaussian_sample(rng, {8, 8});
  Tensor got = matmul(a, b);
  Tensor want = naive_matmul(a, b);
  for (std::size_t i = 0; i < got.data.size(); ++i)
    CHECK(std::abs(got.data[i] - want.data[i]) < 1e-12);
}

TEST_CASE("identity products are exact") {
  RngStream rng(3);
  Tensor a = gaussian_sample(rng, {5, 5});
  CHECK(matmul(identity(5), a) == a);
  CHECK(matmul(a, identity(5)) == a);
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  Tensor a = Tensor::matrix(2, 3);
  Tensor b = Tensor::matrix(2, 3);
  CHECK_THROWS_AS(matmul(a, b), std::invalid_argument);
}

TEST_CASE("relu forward and backward definitions") {
  Tensor x = Tensor::from_rows({{-1, 0, 2}});
  Tensor y = relu_forward(x);
  CHECK(y == Tensor::from_rows({{0, 0, 2}}));

  Tensor x2 = Tensor::from_rows({{-1, 3}});
  Tensor g = Tensor::from_rows({{5, 7}});
  CHECK(relu_backward(x2, g) == Tensor::from_rows({{0, 7}}));

  CHECK_THROWS_AS(relu_backward(x, g), std::invalid_argument);
}

TEST_CASE("relu gradient matches central differences away from the kink") {
  RngStream rng(7);
  Tensor x = gaussian_sample(rng, {4, 6});
  for (double& v : x.data)
    if (std::abs(v) < 0.05) v += v >= 0 ? 0.05 : -0.05;  // keep clear of zero
  Tensor weights = gaussian_sample(rng, {4, 6});

  // loss = sum(w .* relu(x))
  Tensor grad = relu_backward(x, weights);
  const double h = 1e-6;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    Tensor xp = x, xm = x;
    xp.data[i] += h;
    xm.data[i] -= h;
    double lp = 0, lm = 0;
    Tensor rp = relu_forward(xp), rm = relu_forward(xm);
    for (std::size_t j = 0; j < x.data.size(); ++j) {
      lp += weights.data[j] * rp.data[j];
      lm += weights.data[j] * rm.data[j];
    }
    const double fd = (lp - lm) / (2 * h);
    const double denom = std::max(std::abs(fd), 1e-8);
    CHECK(std::abs(grad.data[i] - fd) / denom < 1e-6);
  }
}

TEST_CASE("cross entropy on uniform logits is log C") {
  Tensor logits = Tensor::matrix(2, 9, 0.7);
  CrossEntropyResult res = softmax_cross_entropy(logits, {3, 8});
  CHECK(res.loss == doctest::Approx(std::log(9.0)).epsilon(1e-12));
}

TEST_CASE("cross entropy on saturated logits") {
  Tensor logits = Tensor::from_rows({{10, -10}});
  CrossEntropyResult res = softmax_cross_entropy(logits, {0});
  CHECK(res.loss == doctest::Approx(std::log1p(std::exp(-20.0))).epsilon(1e-6));
  CHECK(res.loss < 1e-8);
}

TEST_CASE("cross entropy rejects out-of-range labels") {
  Tensor logits = Tensor::matrix(1, 3);
  CHECK_THROWS_AS(softmax_cross_entropy(logits, {3}), std::invalid_argument);
  CHECK_THROWS_AS(softmax_cross_entropy(logits, {-1}), std::invalid_argument);
}

TEST_CASE("cross entropy gradient matches central differences") {
  RngStream rng(19);
  Tensor logits = gaussian_sample(rng, {3, 5});
  std::vector<int> labels = {2, 0, 4};
  CrossEntropyResult res = softmax_cross_entropy(logits, labels);

  const double h = 1e-5;
  for (std::size_t i = 0; i < logits.data.size(); ++i) {
    Tensor lp = logits, lm = logits;
    lp.data[i] += h;
    lm.data[i] -= h;
    const double fd = (softmax_cross_entropy(lp, labels).loss -
                       softmax_cross_entropy(lm, labels).loss) /
                      (2 * h);
    const double denom = std::max({std::abs(fd), std::abs(res.grad.data[i]), 1e-6});
    CHECK(std::abs(res.grad.data[i] - fd) / denom < 1e-6);
  }
}

TEST_CASE("cross entropy gradient rows sum to zero") {
  RngStream rng(23);
  Tensor logits = gaussian_sample(rng, {6, 9});
  std::vector<int> labels = {0, 1, 2, 3, 4, 5};
  CrossEntropyResult res = softmax_cross_entropy(logits, labels);
  for (std::size_t i = 0; i < 6; ++i) {
    double sum = 0;
    for (std::size_t j = 0; j < 9; ++j) sum += res.grad.at(i, j);
    CHECK(std::abs(sum) < 1e-12);
  }
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  Tensor t = Tensor::from_rows({{1, 3, 3}, {2, 2, 2}});
  CHECK(argmax_row(t, 0) == 1);
  CHECK(argmax_row(t, 1) == 0);
}
