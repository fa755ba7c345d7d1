#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "onda/batchnorm.hpp"
#include "onda/rng.hpp"
#include "onda/tensor.hpp"

namespace onda {

// MLP classifier: input -> [fc -> batchnorm -> relu]* -> fc -> logits.
struct NetworkSpec {
  std::size_t input_dim = 16;
  std::vector<std::size_t> hidden_dims = {64, 64};
  std::size_t num_classes = 9;

  void validate() const;
};

struct DenseLayer {
  Tensor w;                // in x out
  std::vector<double> b;   // out
};

struct Params {
  NetworkSpec spec;
  std::vector<DenseLayer> fc;  // hidden layers plus the classifier head
  std::vector<BNState> bn;     // one per hidden layer
};

// He-style init: weights ~ N(0, 2/fan_in), biases 0, BN identity.
Params init_params(const NetworkSpec& spec, RngStream& rng);

enum class Regime { kTrain, kEval, kExternal };

// Per-BN-layer (mu, sigma2) pairs, e.g. a domain bank entry or an online
// estimate, used by the external-stats regime.
using StatsSource = std::vector<ChannelStats>;

StatsSource bn_globals(const Params& params);

struct ForwardTrace {
  std::vector<Tensor> pre_bn;     // BN inputs per hidden layer (all regimes)
  std::vector<Tensor> fc_inputs;  // input to each fc layer (train regime)
  std::vector<BNCache> bn_caches; // train regime
  std::vector<Tensor> bn_out;     // BN outputs pre-relu (train regime)
};

Tensor forward(const Params& params, const Tensor& x, Regime regime,
               const StatsSource* external_stats = nullptr, ForwardTrace* trace = nullptr);

struct Grads {
  std::vector<DenseLayer> fc;  // reused as (w grad, b grad) containers
  std::vector<std::vector<double>> gamma, beta;
};

Grads backward(const Params& params, const ForwardTrace& trace, const Tensor& grad_logits);

struct OptConfig {
  double lr_features = 0.01;
  double lr_classifier = 0.1;  // 10x the feature rate
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::size_t epochs = 30;
  std::size_t lr_drop_epoch = 25;
  double lr_drop_factor = 0.1;
  std::size_t batch_size = 64;

  void validate() const;
};

struct Velocity {
  std::vector<DenseLayer> fc;
  std::vector<std::vector<double>> gamma, beta;
};

Velocity zero_velocity(const Params& params);

// v <- m v - lr (g + wd w);  w <- w + v.  The learning rate is multiplied by
// lr_drop_factor once epoch >= lr_drop_epoch.
void sgd_step(Params& params, const Grads& grads, const OptConfig& opt, Velocity& velocity,
              std::size_t epoch);

struct Dataset {
  Tensor x;             // n x d
  std::vector<int> y;   // n labels
  std::size_t size() const { return y.size(); }
};

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices);

// Mini-batch SGD with per-epoch shuffling; BN running statistics are folded
// in after every train-mode forward. Batches that degenerate to one sample
// are dropped. Optionally records the mean batch loss per epoch.
Params train(const NetworkSpec& spec, const Dataset& ds, const OptConfig& opt, RngStream& rng,
             std::vector<double>* epoch_loss = nullptr);

std::vector<int> predict(const Params& params, const Tensor& x, Regime regime,
                         const StatsSource* external_stats = nullptr);

double evaluate(const Params& params, const Dataset& ds, Regime regime,
                const StatsSource* external_stats = nullptr);

// FNV-1a over the spec and every parameter array; identical values hash
// identically within one build.
std::uint64_t params_hash(const Params& params);

}  // namespace onda
