#pragma once

#include <cstdint>
#include <limits>

namespace momcert {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of path `path_index` under `master_seed`. Paths never share a stream
/// and the mapping does not depend on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed,
                                    std::uint64_t path_index) {
  return mix64(mix64(master_seed) ^ mix64(path_index + 0x632be59bd9b4e019ULL));
}

/// Counter-based 64-bit generator: draw n is mix64(key + n * gamma). Meets
/// UniformRandomBitGenerator so it plugs into <random> distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed) : key_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace momcert
