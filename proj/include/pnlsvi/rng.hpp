#pragma once

#include <cstdint>
#include <random>

namespace pnlsvi {

/// Uniform double in [0, 1) from the generator's top 53 bits; bit-identical
/// across platforms, unlike the standard distributions.
inline double uniform_double(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform_double(gen);
}

/// Uniform integer in [0, n).
inline int uniform_int(std::mt19937_64& gen, int n) {
  return static_cast<int>(gen() % static_cast<std::uint64_t>(n));
}

}  // namespace pnlsvi
