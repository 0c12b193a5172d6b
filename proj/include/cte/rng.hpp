#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace cte {

// All randomness flows through std::mt19937_64 plus the hand-rolled draws
// below, so every pipeline stage is bit-reproducible for a fixed seed.
using Rng = std::mt19937_64;

// SplitMix64 of (seed, stream); used to derive independent sub-seeds from a
// single master seed. Stage k of a pipeline uses mix_seed(master, k).
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform_double(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [lo, hi], inclusive, via rejection sampling.
inline int uniform_int(Rng& rng, int lo, int hi) {
  const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return lo + static_cast<int>(v % span);
}

// Standard normal via the Marsaglia polar method (uncached).
inline double normal_double(Rng& rng) {
  for (;;) {
    const double u = 2.0 * uniform_double(rng) - 1.0;
    const double v = 2.0 * uniform_double(rng) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

// In-place Fisher-Yates shuffle driven by uniform_int.
template <typename T>
void shuffle_vec(std::vector<T>& v, Rng& rng) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
    std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(uniform_int(rng, 0, i))]);
  }
}

}  // namespace cte
