#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace mlm {

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of stream `index` derived from a base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return mix64(base ^ mix64(index + 0x9E3779B97F4A7C15ULL));
}

/// SplitMix64: a counter-based generator. The k-th output is mix64(seed + k * golden).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), unbiased by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t r = next();
    while (r >= limit) r = next();
    return r % n;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t a = v.size(); a > 1; --a) {
      const std::size_t b = static_cast<std::size_t>(below(a));
      std::swap(v[a - 1], v[b]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace mlm
