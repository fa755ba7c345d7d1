#include "onda/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "onda/hashing.hpp"

namespace onda {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void apply_update(Tensor& w, Tensor& v, const Tensor& g, double lr, double momentum,
                  double wd) {
  for (std::size_t i = 0; i < w.data.size(); ++i) {
    v.data[i] = momentum * v.data[i] - lr * (g.data[i] + wd * w.data[i]);
    w.data[i] += v.data[i];
  }
}

void apply_update(std::vector<double>& w, std::vector<double>& v,
                  const std::vector<double>& g, double lr, double momentum, double wd) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    v[i] = momentum * v[i] - lr * (g[i] + wd * w[i]);
    w[i] += v[i];
  }
}

}  // namespace

void NetworkSpec::validate() const {
  require(input_dim >= 1, "network: input_dim must be >= 1");
  require(num_classes >= 2, "network: num_classes must be >= 2");
  for (std::size_t h : hidden_dims) require(h >= 1, "network: hidden dims must be >= 1");
}

Params init_params(const NetworkSpec& spec, RngStream& rng) {
  spec.validate();
  Params p;
  p.spec = spec;
  std::size_t fan_in = spec.input_dim;
  for (std::size_t h : spec.hidden_dims) {
    DenseLayer layer;
    layer.w = gaussian_sample(rng, {fan_in, h});
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : layer.w.data) v *= scale;
    layer.b.assign(h, 0.0);
    p.fc.push_back(std::move(layer));
    p.bn.push_back(BNState::identity(h));
    fan_in = h;
  }
  DenseLayer head;
  head.w = gaussian_sample(rng, {fan_in, spec.num_classes});
  const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (double& v : head.w.data) v *= scale;
  head.b.assign(spec.num_classes, 0.0);
  p.fc.push_back(std::move(head));
  return p;
}

StatsSource bn_globals(const Params& params) {
  StatsSource s;
  s.reserve(params.bn.size());
  for (const BNState& bn : params.bn) s.push_back({bn.mu, bn.sigma2});
  return s;
}

namespace {

Tensor dense_forward(const Tensor& x, const DenseLayer& layer) {
  Tensor out = matmul(x, layer.w);
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out.at(i, j) += layer.b[j];
  return out;
}

}  // namespace

Tensor forward(const Params& params, const Tensor& x, Regime regime,
               const StatsSource* external_stats, ForwardTrace* trace) {
  require(x.rank() == 2, "forward: input must be rank 2");
  require(x.cols() == params.spec.input_dim, "forward: input dimension mismatch");
  const std::size_t num_hidden = params.bn.size();
  if (regime == Regime::kExternal) {
    require(external_stats != nullptr, "forward: external regime requires stats");
    require(external_stats->size() == num_hidden,
            "forward: external stats layer count mismatch");
  }

  if (trace) {
    trace->pre_bn.clear();
    trace->fc_inputs.clear();
    trace->bn_caches.clear();
    trace->bn_out.clear();
  }

  Tensor h = x;
  for (std::size_t l = 0; l < num_hidden; ++l) {
    if (trace && regime == Regime::kTrain) trace->fc_inputs.push_back(h);
    Tensor a = dense_forward(h, params.fc[l]);
    if (trace) trace->pre_bn.push_back(a);

    ChannelStats stats;
    switch (regime) {
      case Regime::kTrain:
        stats = batch_stats(a);
        break;
      case Regime::kEval:
        stats = {params.bn[l].mu, params.bn[l].sigma2};
        break;
      case Regime::kExternal:
        stats = (*external_stats)[l];
        break;
    }

    Tensor y;
    if (trace && regime == Regime::kTrain) {
      BNCache cache;
      y = bn_forward(a, params.bn[l], stats, &cache);
      trace->bn_caches.push_back(std::move(cache));
      trace->bn_out.push_back(y);
    } else {
      y = bn_forward(a, params.bn[l], stats);
    }
    h = relu_forward(y);
  }
  if (trace && regime == Regime::kTrain) trace->fc_inputs.push_back(h);
  return dense_forward(h, params.fc.back());
}

Grads backward(const Params& params, const ForwardTrace& trace, const Tensor& grad_logits) {
  const std::size_t num_hidden = params.bn.size();
  require(trace.fc_inputs.size() == num_hidden + 1 && trace.bn_caches.size() == num_hidden,
          "backward: trace was not produced by a train-mode forward");

  Grads g;
  g.fc.resize(num_hidden + 1);
  g.gamma.resize(num_hidden);
  g.beta.resize(num_hidden);

  Tensor d = grad_logits;
  for (std::size_t l = num_hidden + 1; l-- > 0;) {
    g.fc[l].w = matmul(transpose(trace.fc_inputs[l]), d);
    g.fc[l].b = column_sums(d);
    if (l == 0) break;
    Tensor dh = matmul(d, transpose(params.fc[l].w));
    Tensor dy = relu_backward(trace.bn_out[l - 1], dh);
    BNGrads bg = bn_backward(trace.bn_caches[l - 1], params.bn[l - 1], dy);
    g.gamma[l - 1] = std::move(bg.grad_gamma);
    g.beta[l - 1] = std::move(bg.grad_beta);
    d = std::move(bg.grad_x);
  }
  return g;
}

void OptConfig::validate() const {
  require(lr_features > 0 && lr_classifier > 0, "opt: learning rates must be positive");
  require(momentum >= 0 && momentum < 1, "opt: momentum outside [0,1)");
  require(weight_decay >= 0, "opt: weight decay must be nonnegative");
  require(lr_drop_factor > 0, "opt: lr drop factor must be positive");
  require(lr_drop_epoch <= epochs, "opt: lr_drop_epoch must not exceed epochs");
  require(batch_size >= 2, "opt: batch size must be at least 2");
}

Velocity zero_velocity(const Params& params) {
  Velocity v;
  for (const DenseLayer& layer : params.fc) {
    DenseLayer z;
    z.w = Tensor(layer.w.shape, 0.0);
    z.b.assign(layer.b.size(), 0.0);
    v.fc.push_back(std::move(z));
  }
  for (const BNState& bn : params.bn) {
    v.gamma.emplace_back(bn.channels(), 0.0);
    v.beta.emplace_back(bn.channels(), 0.0);
  }
  return v;
}

void sgd_step(Params& params, const Grads& grads, const OptConfig& opt, Velocity& velocity,
              std::size_t epoch) {
  require(grads.fc.size() == params.fc.size(), "sgd_step: gradient layer count mismatch");
  const double drop = epoch >= opt.lr_drop_epoch ? opt.lr_drop_factor : 1.0;
  const double lr_feat = opt.lr_features * drop;
  const double lr_head = opt.lr_classifier * drop;

  for (std::size_t l = 0; l < params.fc.size(); ++l) {
    require(grads.fc[l].w.shape == params.fc[l].w.shape, "sgd_step: weight shape mismatch");
    const double lr = (l + 1 == params.fc.size()) ? lr_head : lr_feat;
    apply_update(params.fc[l].w, velocity.fc[l].w, grads.fc[l].w, lr, opt.momentum,
                 opt.weight_decay);
    apply_update(params.fc[l].b, velocity.fc[l].b, grads.fc[l].b, lr, opt.momentum,
                 opt.weight_decay);
  }
  for (std::size_t l = 0; l < params.bn.size(); ++l) {
    apply_update(params.bn[l].gamma, velocity.gamma[l], grads.gamma[l], lr_feat, opt.momentum,
                 opt.weight_decay);
    apply_update(params.bn[l].beta, velocity.beta[l], grads.beta[l], lr_feat, opt.momentum,
                 opt.weight_decay);
  }
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.x = Tensor::matrix(indices.size(), ds.x.cols());
  out.y.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    for (std::size_t j = 0; j < ds.x.cols(); ++j) out.x.at(i, j) = ds.x.at(indices[i], j);
    out.y.push_back(ds.y[indices[i]]);
  }
  return out;
}

Params train(const NetworkSpec& spec, const Dataset& ds, const OptConfig& opt, RngStream& rng,
             std::vector<double>* epoch_loss) {
  opt.validate();
  require(ds.size() >= 1, "train: empty dataset");
  require(ds.x.rows() == ds.size(), "train: feature/label count mismatch");
  for (int y : ds.y)
    require(y >= 0 && static_cast<std::size_t>(y) < spec.num_classes,
            "train: label out of range");

  Params params = init_params(spec, rng);
  Velocity velocity = zero_velocity(params);
  std::vector<std::size_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t end = std::min(start + opt.batch_size, order.size());
      if (end - start < 2) continue;  // BN statistics need at least two samples
      std::vector<std::size_t> batch(order.begin() + start, order.begin() + end);
      Dataset mb = subset(ds, batch);

      ForwardTrace trace;
      Tensor logits = forward(params, mb.x, Regime::kTrain, nullptr, &trace);
      for (std::size_t l = 0; l < params.bn.size(); ++l)
        update_running(params.bn[l], trace.bn_caches[l].stats, mb.size(),
                       params.bn[l].train_momentum);

      CrossEntropyResult ce = softmax_cross_entropy(logits, mb.y);
      Grads grads = backward(params, trace, ce.grad);
      sgd_step(params, grads, opt, velocity, epoch);
      loss_sum += ce.loss;
      ++batches;
    }
    if (epoch_loss) epoch_loss->push_back(batches ? loss_sum / static_cast<double>(batches) : 0.0);
  }
  return params;
}

std::vector<int> predict(const Params& params, const Tensor& x, Regime regime,
                         const StatsSource* external_stats) {
  Tensor logits = forward(params, x, regime, external_stats);
  std::vector<int> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    out[i] = static_cast<int>(argmax_row(logits, i));
  return out;
}

double evaluate(const Params& params, const Dataset& ds, Regime regime,
                const StatsSource* external_stats) {
  require(ds.size() >= 1, "evaluate: empty dataset");
  const std::vector<int> pred = predict(params, ds.x, regime, external_stats);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == ds.y[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

std::uint64_t params_hash(const Params& params) {
  std::uint64_t h = kFnvOffset;
  h = fnv1a_bytes(&params.spec.input_dim, sizeof(params.spec.input_dim), h);
  for (std::size_t d : params.spec.hidden_dims) h = fnv1a_bytes(&d, sizeof(d), h);
  h = fnv1a_bytes(&params.spec.num_classes, sizeof(params.spec.num_classes), h);
  for (const DenseLayer& layer : params.fc) {
    h = fnv1a(layer.w.data, h);
    h = fnv1a(layer.b, h);
  }
  for (const BNState& bn : params.bn) {
    h = fnv1a(bn.gamma, h);
    h = fnv1a(bn.beta, h);
    h = fnv1a(bn.mu, h);
    h = fnv1a(bn.sigma2, h);
  }
  return h;
}

}  // namespace onda
