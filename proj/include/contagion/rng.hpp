#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace contagion {

// Deterministic, platform-independent random streams. std::shuffle and the
// std distributions are implementation-defined, so everything that must be
// bit-reproducible across compilers and thread counts goes through here.

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), unbiased via rejection.
  std::uint64_t next_below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t threshold = (0ull - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t u = next_u64();
      if (u >= threshold) return u % n;
    }
  }

  bool bernoulli(double p) { return next_double() < p; }

  double exponential(double mean) {
    // Inverse CDF; next_double() < 1 so the log argument stays positive.
    return -mean * std::log(1.0 - next_double());
  }

  double normal() {
    // Box-Muller, one value per call.
    const double u1 = 1.0 - next_double();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::uint64_t state_;
};

// Stream seed for (master, replicate, match): independent per-match streams so
// replicates can run in any order on any number of threads.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replicate,
                                 std::uint64_t match_key) {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ replicate);
  h = mix64(h ^ match_key);
  return h;
}

// Fisher-Yates over an index range of a vector, using only SplitMix64 draws.
template <typename T>
void shuffle_span(std::vector<T>& items, std::size_t begin, std::size_t end, SplitMix64& rng) {
  for (std::size_t i = end - begin; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(items[begin + i - 1], items[begin + j]);
  }
}

template <typename T>
void shuffle_all(std::vector<T>& items, SplitMix64& rng) {
  if (!items.empty()) shuffle_span(items, 0, items.size(), rng);
}

}  // namespace contagion
