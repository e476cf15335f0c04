#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace regretforge {

// Counter-based stream splitting: every named consumer derives its own
// generator from (master seed, stream name, index), so adding or reordering
// consumers never perturbs the draws seen by the others.
uint64_t stream_seed(uint64_t master, std::string_view name, uint64_t index);

std::mt19937_64 make_stream(uint64_t master, std::string_view name, uint64_t index = 0);

inline double uniform_unit(std::mt19937_64& rng) {
  // 53-bit mantissa draw in [0,1); stable across standard library versions.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(rng);
}

}  // namespace regretforge
