#pragma once

#include <cstdint>
#include <random>

namespace spinlab {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed splitting rule used everywhere a master seed fans out to tasks:
// task i gets mix64(mix64(master) + i). Streams are independent of the
// order in which tasks run.
constexpr std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) + index);
}

inline Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

}  // namespace spinlab
