#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "onda/tensor.hpp"

namespace onda {

// xoshiro256++ seeded through SplitMix64. The same (seed, stream) pair always
// produces the same sequence; distinct stream indices give unrelated
// sequences, so parallel workers can each own one.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  double uniform();   // [0, 1)
  double gaussian();  // standard normal, Box-Muller with a cached spare
  std::size_t uniform_below(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// i.i.d. standard normal entries.
Tensor gaussian_sample(RngStream& rng, const std::vector<std::size_t>& shape);

std::vector<std::size_t> shuffled_indices(std::size_t n, RngStream& rng);

}  // namespace onda
