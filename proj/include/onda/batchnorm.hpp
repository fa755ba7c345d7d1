#pragma once

#include <cstddef>
#include <vector>

#include "onda/tensor.hpp"

namespace onda {

// Learned affine parameters plus global normalization statistics for one
// layer of K channels. The globals are mutated only by update_running;
// forward/backward treat the state as read-only.
struct BNState {
  std::vector<double> gamma, beta;  // scale and bias
  std::vector<double> mu, sigma2;   // global per-channel mean / variance
  double eps = 1e-5;
  double train_momentum = 0.1;

  static BNState identity(std::size_t channels);
  std::size_t channels() const { return gamma.size(); }
};

struct ChannelStats {
  std::vector<double> mu, sigma2;
};

// Per-channel population mean and variance of a batch (rows = samples).
ChannelStats batch_stats(const Tensor& x);

struct BNCache {
  Tensor input;
  ChannelStats stats;  // the statistics the batch was normalized with
  Tensor xhat;         // normalized pre-affine values
};

// y = gamma * (x - mu) / sqrt(sigma2 + eps) + beta, per channel.
// The caller chooses stats for the regime: batch stats while training, the
// state's globals for frozen eval, or an externally estimated pair.
Tensor bn_forward(const Tensor& x, const BNState& state, const ChannelStats& stats,
                  BNCache* cache = nullptr);

struct BNGrads {
  Tensor grad_x;
  std::vector<double> grad_gamma, grad_beta;
};

// Exact gradients through a train-mode forward, with the batch statistics
// treated as functions of the input.
BNGrads bn_backward(const BNCache& cache, const BNState& state, const Tensor& grad_y);

// mu <- (1-m) mu + m mu_b;  sigma2 <- (1-m) sigma2 + m * n/(n-1) * sigma2_b.
// Rejects n_b < 2 (the Bessel factor is undefined for a single sample).
void update_running(BNState& state, const ChannelStats& batch, std::size_t n_b, double momentum);

}  // namespace onda
