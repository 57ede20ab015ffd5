#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace resonator {

using Rng = std::mt19937_64;

/// Stream tags keep the random draws of different purposes within one trial
/// independent of each other.
enum class Stream : std::uint64_t {
  Problem = 1,
  Solver = 2,
  Corruption = 3,
  Initialization = 4,
};

/// Generator for one trial, derived from the master seed and a list of keys
/// (trial index, grid point, ...). The derivation only depends on the values,
/// so scheduling trials on different threads never changes their draws.
Rng derive_rng(std::uint64_t master_seed, Stream stream,
               std::initializer_list<std::uint64_t> keys);

/// Deterministic 64-bit seed derived the same way, for APIs that take a seed.
std::uint64_t derive_seed(std::uint64_t master_seed, Stream stream,
                          std::initializer_list<std::uint64_t> keys);

}  // namespace resonator
