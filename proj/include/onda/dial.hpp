#pragma once

#include <map>
#include <string>

#include "onda/network.hpp"

namespace onda {

// Per-domain BN statistics with shared weights and shared gamma/beta. The
// upper bound the online adapter is measured against: it sees the target
// data at training time, the online adapter does not.
struct DomainBNBank {
  std::map<std::string, StatsSource> stats;  // keys: "source", "target"
};

struct DialResult {
  Params params;
  DomainBNBank bank;
};

// Mini-batch split proportional to the dataset sizes: ceil(b*Ns/(Ns+Nt))
// source samples, the rest target, clamped so each side keeps at least two
// samples. Throws when the batch cannot accommodate both branches.
std::pair<std::size_t, std::size_t> dial_split(std::size_t batch_size, std::size_t n_source,
                                               std::size_t n_target);

// Joint training on labeled source data plus unlabeled target features.
// Every mini-batch is split proportionally to the dataset sizes; the source
// half drives the supervised loss, the target half only refreshes the target
// branch statistics. Target labels never enter (the interface has none).
DialResult dial_train_from(const Params& init, const Dataset& source,
                           const Tensor& target_features, const OptConfig& opt,
                           RngStream& rng);

DialResult dial_train(const NetworkSpec& spec, const Dataset& source,
                      const Tensor& target_features, const OptConfig& opt, RngStream& rng);

double dial_evaluate(const Params& params, const DomainBNBank& bank, const Dataset& ds,
                     const std::string& domain_id);

}  // namespace onda
