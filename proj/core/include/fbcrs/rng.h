#pragma once

#include <cstdint>
#include <limits>

namespace fbcrs {

// SplitMix64 finalizer; used only to derive stream keys.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// xoshiro256** seeded so that stream `index` under `root_seed` is a pure
// function of the pair. Streams for distinct indices are statistically
// independent for all practical purposes (distinct SplitMix64 seeds).
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t root_seed, std::uint64_t index) {
    std::uint64_t key = root_seed ^ (0xD1B54A32D192ED03ULL * (index + 1));
    // Two SplitMix64 rounds decorrelate adjacent (seed, index) pairs.
    key = splitmix64(key) ^ index;
    for (auto& word : s_) word = splitmix64(key);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Ber(p); p outside [0, 1] saturates.
  bool bernoulli(double p) { return uniform() < p; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
};

}  // namespace fbcrs
