#pragma once

#include <optional>
#include <string>

#include "onda/dial.hpp"
#include "onda/network.hpp"

namespace onda {

// Single JSON document holding the spec, every parameter array and,
// optionally, the per-domain statistics bank. Doubles are serialized with
// enough digits that a round trip is bit-exact.
void save_model(const std::string& path, const Params& params,
                const DomainBNBank* bank = nullptr);

struct LoadedModel {
  Params params;
  std::optional<DomainBNBank> bank;
};

LoadedModel load_model(const std::string& path);

}  // namespace onda
