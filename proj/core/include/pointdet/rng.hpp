#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace pointdet {

// splitmix64 round; used to derive independent stream seeds from
// (base seed, index) pairs so every component owns its own RNG.
uint64_t splitmix64(uint64_t x);

// Deterministic seed derivation: mix(base, a, b, ...).
inline uint64_t mix_seed(uint64_t base) { return splitmix64(base); }
template <typename... Rest>
uint64_t mix_seed(uint64_t base, uint64_t next, Rest... rest) {
  return mix_seed(splitmix64(base ^ (next + 0x9e3779b97f4a7c15ull)), rest...);
}

using Rng = std::mt19937_64;

inline Rng make_rng(uint64_t seed) { return Rng(splitmix64(seed)); }

// Fisher-Yates shuffle with an explicit bound draw. std::shuffle leaves the
// draw scheme to the standard library; this one is fixed so shuffled orders
// are part of the reproducibility contract.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace pointdet
