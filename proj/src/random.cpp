#include "resonator/random.hpp"

#include <vector>

namespace resonator {

namespace {

std::vector<std::uint32_t> seed_words(std::uint64_t master_seed, Stream stream,
                                      std::initializer_list<std::uint64_t> keys) {
  std::vector<std::uint32_t> words;
  words.reserve(4 + 2 * keys.size());
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(master_seed);
  push(static_cast<std::uint64_t>(stream));
  for (auto k : keys) push(k);
  return words;
}

}  // namespace

Rng derive_rng(std::uint64_t master_seed, Stream stream,
               std::initializer_list<std::uint64_t> keys) {
  auto words = seed_words(master_seed, stream, keys);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

std::uint64_t derive_seed(std::uint64_t master_seed, Stream stream,
                          std::initializer_list<std::uint64_t> keys) {
  auto rng = derive_rng(master_seed, stream, keys);
  return rng();
}

}  // namespace resonator
