#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>
#include <vector>

namespace onda {

inline constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a_bytes(const void* bytes, std::size_t n,
                                 std::uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = kFnvOffset) {
  return fnv1a_bytes(s.data(), s.size(), h);
}

inline std::uint64_t fnv1a(const std::vector<double>& v, std::uint64_t h = kFnvOffset) {
  return fnv1a_bytes(v.data(), v.size() * sizeof(double), h);
}

}  // namespace onda
