#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace kgflow {

/// SplitMix64 finalizer; bijective on 64-bit words.
inline std::uint64_t split_mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a key sequence. Streams keyed by
/// (master seed, cell, trial, ...) stay reproducible under any execution order.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = 0x8f1bbcdcbfa53e0bULL;
  for (std::uint64_t k : keys) h = split_mix64(h ^ split_mix64(k));
  return h;
}

inline std::mt19937_64 seeded_rng(std::initializer_list<std::uint64_t> keys) {
  return std::mt19937_64(mix_seed(keys));
}

}  // namespace kgflow
