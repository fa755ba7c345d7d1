#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "onda/batchnorm.hpp"
#include "onda/rng.hpp"

using namespace onda;

namespace {

// Welford's online algorithm, structurally independent of batch_stats.
ChannelStats welford_stats(const Tensor& x) {
  const std::size_t n = x.rows(), k = x.cols();
  ChannelStats s;
  s.mu.assign(k, 0.0);
  s.sigma2.assign(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double delta = x.at(i, j) - mean;
      mean += delta / static_cast<double>(i + 1);
      m2 += delta * (x.at(i, j) - mean);
    }
    s.mu[j] = mean;
    s.sigma2[j] = m2 / static_cast<double>(n);
  }
  return s;
}

}  // namespace

TEST_CASE("batch_stats hand cases") {
  ChannelStats s = batch_stats(Tensor::from_rows({{0}, {2}}));
  CHECK(s.mu[0] == doctest::Approx(1.0));
  CHECK(s.sigma2[0] == doctest::Approx(1.0));

  // Integer-valued constant batch: the mean is exact, so the variance is 0.
  Tensor constant = Tensor::matrix(64, 3, 7.0);
  ChannelStats cs = batch_stats(constant);
  for (double v : cs.sigma2) CHECK(v == 0.0);
}

TEST_CASE("batch_stats matches an independent two-pass oracle") {
  RngStream rng(31);
  Tensor x = gaussian_sample(rng, {64, 8});
  ChannelStats got = batch_stats(x);
  ChannelStats want = welford_stats(x);
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(std::abs(got.mu[j] - want.mu[j]) < 1e-12);
    CHECK(std::abs(got.sigma2[j] - want.sigma2[j]) < 1e-12);
  }
}

TEST_CASE("bn_forward identity and direct evaluation") {
  BNState s = BNState::identity(3);
  s.eps = 0.0;
  RngStream rng(5);
  Tensor x = gaussian_sample(rng, {4, 3});
  Tensor y = bn_forward(x, s, {s.mu, s.sigma2});
  CHECK(y == x);

  BNState s2;
  s2.gamma = {2.0};
  s2.beta = {1.0};
  s2.mu = {3.0};
  s2.sigma2 = {4.0};
  s2.eps = 0.0;
  Tensor x2 = Tensor::from_rows({{5.0}});
  Tensor y2 = bn_forward(x2, s2, {s2.mu, s2.sigma2});
  CHECK(y2.at(0, 0) == doctest::Approx(3.0));
}

TEST_CASE("train-mode forward lands on beta and gamma-scaled spread") {
  RngStream rng(17);
  const std::size_t n = 32, k = 5;
  Tensor x = gaussian_sample(rng, {n, k});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) x.at(i, j) = 3.0 * x.at(i, j) + double(j);

  BNState s = BNState::identity(k);
  s.gamma = {1.0, 2.0, 0.5, 3.0, 1.5};
  s.beta = {0.0, -1.0, 2.0, 0.25, 5.0};
  ChannelStats bs = batch_stats(x);
  Tensor y = bn_forward(x, s, bs);

  for (std::size_t j = 0; j < k; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += y.at(i, j);
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (y.at(i, j) - mean) * (y.at(i, j) - mean);
    var /= n;
    const double want_std = s.gamma[j] * std::sqrt(bs.sigma2[j] / (bs.sigma2[j] + s.eps));
    CHECK(std::abs(mean - s.beta[j]) < 1e-10);
    CHECK(std::abs(std::sqrt(var) - std::abs(want_std)) < 1e-10);
  }
}

TEST_CASE("bn_forward rejects channel mismatches") {
  BNState s = BNState::identity(3);
  Tensor x = Tensor::matrix(2, 4);
  CHECK_THROWS_AS(bn_forward(x, s, {s.mu, s.sigma2}), std::invalid_argument);
}

TEST_CASE("affine reparameterization identity") {
  RngStream rng(41);
  Tensor x = gaussian_sample(rng, {16, 4});
  ChannelStats bs = batch_stats(x);

  BNState affine = BNState::identity(4);
  affine.gamma = {2.0, -1.0, 0.5, 3.0};
  affine.beta = {1.0, 0.0, -2.0, 0.25};
  BNState plain = BNState::identity(4);

  Tensor ya = bn_forward(x, affine, bs);
  Tensor yp = bn_forward(x, plain, bs);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j)
      CHECK(std::abs(ya.at(i, j) - (yp.at(i, j) * affine.gamma[j] + affine.beta[j])) < 1e-12);
}

TEST_CASE("eval-regime forward is pure") {
  RngStream rng(43);
  Tensor x = gaussian_sample(rng, {8, 3});
  BNState s = BNState::identity(3);
  s.mu = {0.5, -1.0, 2.0};
  s.sigma2 = {1.5, 0.25, 4.0};
  Tensor y1 = bn_forward(x, s, {s.mu, s.sigma2});
  Tensor y2 = bn_forward(x, s, {s.mu, s.sigma2});
  CHECK(y1 == y2);
}

TEST_CASE("bn_backward trivial directions") {
  RngStream rng(47);
  Tensor x = gaussian_sample(rng, {6, 3});
  BNState s = BNState::identity(3);
  BNCache cache;
  bn_forward(x, s, batch_stats(x), &cache);

  Tensor const_grad = Tensor::matrix(6, 3, 2.5);
  BNGrads g = bn_backward(cache, s, const_grad);
  for (double v : g.grad_x.data) CHECK(std::abs(v) < 1e-12);

  Tensor gy = gaussian_sample(rng, {6, 3});
  BNGrads g2 = bn_backward(cache, s, gy);
  std::vector<double> sums = column_sums(gy);
  for (std::size_t j = 0; j < 3; ++j) CHECK(g2.grad_beta[j] == sums[j]);
}

TEST_CASE("bn_backward matches central differences") {
  RngStream rng(53);
  const std::size_t n = 4, k = 3;
  Tensor x = gaussian_sample(rng, {n, k});
  BNState s = BNState::identity(k);
  s.gamma = {1.5, 0.5, 2.0};
  s.beta = {0.1, -0.2, 0.3};
  Tensor weights = gaussian_sample(rng, {n, k});  // loss = sum(w .* y)

  auto loss_of = [&](const Tensor& input, const BNState& state) {
    Tensor y = bn_forward(input, state, batch_stats(input));
    double l = 0.0;
    for (std::size_t i = 0; i < y.data.size(); ++i) l += weights.data[i] * y.data[i];
    return l;
  };

  BNCache cache;
  bn_forward(x, s, batch_stats(x), &cache);
  BNGrads g = bn_backward(cache, s, weights);

  // Relative error on the full gradient vector (input, gamma, beta).
  const double h = 1e-3;
  std::vector<double> analytic, numeric;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    Tensor xp = x, xm = x;
    xp.data[i] += h;
    xm.data[i] -= h;
    analytic.push_back(g.grad_x.data[i]);
    numeric.push_back((loss_of(xp, s) - loss_of(xm, s)) / (2 * h));
  }
  for (std::size_t j = 0; j < k; ++j) {
    BNState sp = s, sm = s;
    sp.gamma[j] += h;
    sm.gamma[j] -= h;
    analytic.push_back(g.grad_gamma[j]);
    numeric.push_back((loss_of(x, sp) - loss_of(x, sm)) / (2 * h));
    sp = s;
    sm = s;
    sp.beta[j] += h;
    sm.beta[j] -= h;
    analytic.push_back(g.grad_beta[j]);
    numeric.push_back((loss_of(x, sp) - loss_of(x, sm)) / (2 * h));
  }
  double err = 0, norm = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    err += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    norm += numeric[i] * numeric[i];
  }
  CHECK(std::sqrt(err) / std::sqrt(norm) < 1e-4);
}

TEST_CASE("update_running hand cases and errors") {
  BNState s = BNState::identity(1);
  s.mu = {5.0};
  s.sigma2 = {5.0};

  BNState frozen = s;
  update_running(frozen, {{1.0}, {1.0}}, 2, 0.0);
  CHECK(frozen.mu[0] == 5.0);
  CHECK(frozen.sigma2[0] == 5.0);

  ChannelStats batch = batch_stats(Tensor::from_rows({{0.0}, {2.0}}));
  update_running(s, batch, 2, 1.0);
  CHECK(s.mu[0] == doctest::Approx(1.0));
  CHECK(s.sigma2[0] == doctest::Approx(2.0));  // population 1 times Bessel 2/1

  CHECK_THROWS_AS(update_running(s, batch, 1, 0.1), std::invalid_argument);
}

TEST_CASE("50 sequential updates match the unrolled recursion") {
  RngStream rng(59);
  const double m = 0.1;
  const std::size_t n_b = 16, k = 4, steps = 50;

  BNState s = BNState::identity(k);
  std::vector<ChannelStats> history;
  for (std::size_t t = 0; t < steps; ++t) {
    ChannelStats bs = batch_stats(gaussian_sample(rng, {n_b, k}));
    history.push_back(bs);
    update_running(s, bs, n_b, m);
  }

  // Closed form: x_T = (1-m)^T x_0 + m sum_t (1-m)^(T-1-t) v_t.
  const double bessel = double(n_b) / double(n_b - 1);
  for (std::size_t j = 0; j < k; ++j) {
    double mu = std::pow(1.0 - m, steps) * 0.0;
    double sigma2 = std::pow(1.0 - m, steps) * 1.0;
    for (std::size_t t = 0; t < steps; ++t) {
      const double w = m * std::pow(1.0 - m, steps - 1 - t);
      mu += w * history[t].mu[j];
      sigma2 += w * bessel * history[t].sigma2[j];
    }
    CHECK(std::abs(s.mu[j] - mu) < 1e-12);
    CHECK(std::abs(s.sigma2[j] - sigma2) < 1e-12);
  }
}

TEST_CASE("variance stays nonnegative under any update sequence") {
  RngStream rng(61);
  BNState s = BNState::identity(3);
  for (int t = 0; t < 200; ++t) {
    Tensor x = gaussian_sample(rng, {4, 3});
    for (double& v : x.data) v *= rng.uniform() * 3.0;
    const double m = rng.uniform();
    update_running(s, batch_stats(x), 4, m);
    for (double v : s.sigma2) CHECK(v >= 0.0);
  }
}
