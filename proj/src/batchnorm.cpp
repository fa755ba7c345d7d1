#include "onda/batchnorm.hpp"

#include <cmath>
#include <stdexcept>

namespace onda {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

BNState BNState::identity(std::size_t channels) {
  BNState s;
  s.gamma.assign(channels, 1.0);
  s.beta.assign(channels, 0.0);
  s.mu.assign(channels, 0.0);
  s.sigma2.assign(channels, 1.0);
  return s;
}

ChannelStats batch_stats(const Tensor& x) {
  require(x.rank() == 2, "batch_stats: input must be rank 2");
  const std::size_t n = x.rows(), k = x.cols();
  require(n >= 1, "batch_stats: empty batch");
  ChannelStats s;
  s.mu.assign(k, 0.0);
  s.sigma2.assign(k, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) s.mu[j] += x.at(i, j);
  for (std::size_t j = 0; j < k; ++j) s.mu[j] /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      const double d = x.at(i, j) - s.mu[j];
      s.sigma2[j] += d * d;
    }
  for (std::size_t j = 0; j < k; ++j) s.sigma2[j] /= static_cast<double>(n);
  return s;
}

Tensor bn_forward(const Tensor& x, const BNState& state, const ChannelStats& stats,
                  BNCache* cache) {
  require(x.rank() == 2, "bn_forward: input must be rank 2");
  const std::size_t n = x.rows(), k = x.cols();
  require(k == state.channels(), "bn_forward: channel count mismatch");
  require(stats.mu.size() == k && stats.sigma2.size() == k,
          "bn_forward: stats channel count mismatch");

  Tensor xhat = Tensor::matrix(n, k);
  Tensor y = Tensor::matrix(n, k);
  for (std::size_t j = 0; j < k; ++j) {
    const double inv_std = 1.0 / std::sqrt(stats.sigma2[j] + state.eps);
    for (std::size_t i = 0; i < n; ++i) {
      const double h = (x.at(i, j) - stats.mu[j]) * inv_std;
      xhat.at(i, j) = h;
      y.at(i, j) = state.gamma[j] * h + state.beta[j];
    }
  }
  if (cache) {
    cache->input = x;
    cache->stats = stats;
    cache->xhat = std::move(xhat);
  }
  return y;
}

BNGrads bn_backward(const BNCache& cache, const BNState& state, const Tensor& grad_y) {
  require(cache.input.rank() == 2, "bn_backward: cache is empty");
  const std::size_t n = cache.input.rows(), k = cache.input.cols();
  require(grad_y.shape == cache.input.shape, "bn_backward: cache/grad shape mismatch");
  require(k == state.channels(), "bn_backward: channel count mismatch");
  require(cache.xhat.shape == cache.input.shape, "bn_backward: stale cache");

  BNGrads g;
  g.grad_x = Tensor::matrix(n, k);
  g.grad_gamma.assign(k, 0.0);
  g.grad_beta.assign(k, 0.0);

  for (std::size_t j = 0; j < k; ++j) {
    const double inv_std = 1.0 / std::sqrt(cache.stats.sigma2[j] + state.eps);
    double sum_dxhat = 0.0;
    double sum_dxhat_xhat = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dy = grad_y.at(i, j);
      const double h = cache.xhat.at(i, j);
      g.grad_gamma[j] += dy * h;
      g.grad_beta[j] += dy;
      const double dxhat = dy * state.gamma[j];
      sum_dxhat += dxhat;
      sum_dxhat_xhat += dxhat * h;
    }
    const double scale = inv_std / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double dxhat = grad_y.at(i, j) * state.gamma[j];
      g.grad_x.at(i, j) = scale * (static_cast<double>(n) * dxhat - sum_dxhat -
                                   cache.xhat.at(i, j) * sum_dxhat_xhat);
    }
  }
  return g;
}

void update_running(BNState& state, const ChannelStats& batch, std::size_t n_b,
                    double momentum) {
  require(n_b >= 2, "update_running: batch size must be at least 2");
  require(momentum >= 0.0 && momentum <= 1.0, "update_running: momentum outside [0,1]");
  const std::size_t k = state.channels();
  require(batch.mu.size() == k && batch.sigma2.size() == k,
          "update_running: channel count mismatch");
  const double bessel =
      static_cast<double>(n_b) / static_cast<double>(n_b - 1);
  for (std::size_t j = 0; j < k; ++j) {
    state.mu[j] = (1.0 - momentum) * state.mu[j] + momentum * batch.mu[j];
    state.sigma2[j] =
        (1.0 - momentum) * state.sigma2[j] + momentum * bessel * batch.sigma2[j];
  }
}

}  // namespace onda
