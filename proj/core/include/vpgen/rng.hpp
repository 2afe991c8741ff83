#pragma once

#include <cstdint>

namespace vpgen {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Counter-based generator: a draw depends only on (seed, stream, index),
// never on evaluation order, so ensembles are reproducible under any
// permutation of construction work.
struct CounterRng {
  std::uint64_t seed = 0;

  std::uint64_t bits(std::uint64_t stream, std::uint64_t index) const {
    return splitmix64(seed ^ splitmix64(0x5bd1e9955bd1e995ull * stream
                                        ^ splitmix64(index)));
  }

  // uniform in [0,1)
  double uniform(std::uint64_t stream, std::uint64_t index) const {
    return static_cast<double>(bits(stream, index) >> 11) * 0x1.0p-53;
  }
};

}  // namespace vpgen
