#include "onda/dial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace onda {

namespace {

void require_config(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Cyclic walk over a shuffled index list; reshuffles when a full pass ends.
class BatchCursor {
 public:
  BatchCursor(std::size_t n, RngStream& rng) : indices_(n), rng_(rng) {
    for (std::size_t i = 0; i < n; ++i) indices_[i] = i;
    rng_.shuffle(indices_);
  }

  std::vector<std::size_t> take(std::size_t count) {
    std::vector<std::size_t> out;
    out.reserve(count);
    while (out.size() < count) {
      if (pos_ == indices_.size()) {
        rng_.shuffle(indices_);
        pos_ = 0;
      }
      out.push_back(indices_[pos_++]);
    }
    return out;
  }

 private:
  std::vector<std::size_t> indices_;
  RngStream& rng_;
  std::size_t pos_ = 0;
};

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx) {
  Tensor out = Tensor::matrix(idx.size(), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out.at(i, j) = x.at(idx[i], j);
  return out;
}

}  // namespace

std::pair<std::size_t, std::size_t> dial_split(std::size_t batch_size, std::size_t n_source,
                                               std::size_t n_target) {
  require_config(n_source >= 1 && n_target >= 1, "dial: both datasets must be nonempty");
  std::size_t n_src = static_cast<std::size_t>(
      std::ceil(static_cast<double>(batch_size) * static_cast<double>(n_source) /
                static_cast<double>(n_source + n_target)));
  const std::size_t proportional = n_src;
  if (batch_size < 4)
    throw std::invalid_argument("dial: batch size too small for a valid source/target split");
  // Both branches need at least two samples for valid batch statistics.
  n_src = std::clamp<std::size_t>(n_src, 2, batch_size - 2);
  if (n_src != proportional)
    std::fprintf(stderr, "dial: clamped source sub-batch from %zu to %zu (batch %zu)\n",
                 proportional, n_src, batch_size);
  return {n_src, batch_size - n_src};
}

DialResult dial_train_from(const Params& init, const Dataset& source,
                           const Tensor& target_features, const OptConfig& opt,
                           RngStream& rng) {
  opt.validate();
  require_config(source.size() >= 1, "dial: empty source dataset");
  require_config(target_features.rank() == 2 && target_features.rows() >= 1,
                 "dial: empty target dataset");
  require_config(target_features.cols() == init.spec.input_dim,
                 "dial: target feature dimension mismatch");

  const std::size_t n_s = source.size();
  const std::size_t n_t = target_features.rows();
  const auto [n_src, n_tgt] = dial_split(opt.batch_size, n_s, n_t);

  DialResult res;
  res.params = init;
  // The target branch starts from the source globals and converges to the
  // target statistics over training.
  res.bank.stats["target"] = bn_globals(res.params);

  Velocity velocity = zero_velocity(res.params);
  BatchCursor source_cursor(n_s, rng);
  BatchCursor target_cursor(n_t, rng);
  const std::size_t batches_per_epoch = std::max<std::size_t>(1, (n_s + n_t) / b);

  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    for (std::size_t it = 0; it < batches_per_epoch; ++it) {
      Dataset src_mb = subset(source, source_cursor.take(n_src));
      Tensor tgt_mb = gather_rows(target_features, target_cursor.take(n_tgt));

      // Source branch: supervised pass, updates the source globals held in
      // the shared BNState.
      ForwardTrace trace;
      Tensor logits = forward(res.params, src_mb.x, Regime::kTrain, nullptr, &trace);
      for (std::size_t l = 0; l < res.params.bn.size(); ++l)
        update_running(res.params.bn[l], trace.bn_caches[l].stats, n_src,
                       res.params.bn[l].train_momentum);

      // Target branch: forward only, normalized by its own batch statistics;
      // refreshes the target entry of the bank.
      ForwardTrace tgt_trace;
      forward(res.params, tgt_mb, Regime::kTrain, nullptr, &tgt_trace);
      for (std::size_t l = 0; l < res.params.bn.size(); ++l) {
        BNState& entry_holder = res.params.bn[l];
        ChannelStats tgt_stats = tgt_trace.bn_caches[l].stats;
        const double bessel = static_cast<double>(n_tgt) / static_cast<double>(n_tgt - 1);
        const double m = entry_holder.train_momentum;
        ChannelStats& entry = res.bank.stats["target"][l];
        for (std::size_t c = 0; c < entry.mu.size(); ++c) {
          entry.mu[c] = (1.0 - m) * entry.mu[c] + m * tgt_stats.mu[c];
          entry.sigma2[c] = (1.0 - m) * entry.sigma2[c] + m * bessel * tgt_stats.sigma2[c];
        }
      }

      CrossEntropyResult ce = softmax_cross_entropy(logits, src_mb.y);
      Grads grads = backward(res.params, trace, ce.grad);
      sgd_step(res.params, grads, opt, velocity, epoch);
    }
  }

  res.bank.stats["source"] = bn_globals(res.params);
  return res;
}

DialResult dial_train(const NetworkSpec& spec, const Dataset& source,
                      const Tensor& target_features, const OptConfig& opt, RngStream& rng) {
  Params init = init_params(spec, rng);
  return dial_train_from(init, source, target_features, opt, rng);
}

double dial_evaluate(const Params& params, const DomainBNBank& bank, const Dataset& ds,
                     const std::string& domain_id) {
  auto it = bank.stats.find(domain_id);
  if (it == bank.stats.end())
    throw std::invalid_argument("dial_evaluate: unknown domain id '" + domain_id + "'");
  if (it->second.size() != params.bn.size())
    throw std::invalid_argument("dial_evaluate: bank entry is empty or malformed");
  for (std::size_t l = 0; l < it->second.size(); ++l)
    if (it->second[l].mu.size() != params.bn[l].channels())
      throw std::invalid_argument("dial_evaluate: bank entry is empty or malformed");
  return evaluate(params, ds, Regime::kExternal, &it->second);
}

}  // namespace onda
