#pragma once

#include <cstdint>
#include <string_view>

namespace pvgate::util {

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// splitmix64. Tiny, fully specified PRNG; used wherever replay across runs
// must be bit-identical.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline double uniform_unit(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;  // [0,1)
}

inline double uniform_range(std::uint64_t& state, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(state);
}

}  // namespace pvgate::util
