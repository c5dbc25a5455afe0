#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace hai {

/// SplitMix64: tiny, cheap to construct, and good enough to derive sub-seeds or drive
/// std distributions where constructing an mt19937_64 per draw would dominate.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Deterministically mixes a base seed with purpose tags into an independent stream seed.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  SplitMix64 mix(base);
  std::uint64_t out = mix();
  for (std::uint64_t t : tags) {
    SplitMix64 step(out ^ (t * 0xD1B54A32D192ED03ULL + 0x2545F4914F6CDD1DULL));
    out = step();
  }
  return out;
}

}  // namespace hai
