#pragma once

#include <cstdint>
#include <iterator>
#include <random>
#include <string_view>
#include <utility>

namespace reqlens {

// Mersenne Twister with a portable bounded-integer draw; the standard
// distributions are implementation-defined, which would make seeded runs
// differ across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint32_t seed) : engine_(seed) {}

  std::uint32_t next() { return static_cast<std::uint32_t>(engine_()); }

  // Uniform in [0, n), n >= 1, by rejection of the biased low range.
  std::uint32_t below(std::uint32_t n) {
    const std::uint32_t threshold = static_cast<std::uint32_t>(-n) % n;
    for (;;) {
      const std::uint32_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform in [0, 1) with 53 bits.
  double uniform() {
    const std::uint64_t hi = next() >> 5;
    const std::uint64_t lo = next() >> 6;
    return static_cast<double>(hi * 67108864u + lo) / 9007199254740992.0;
  }

  // Fisher-Yates, walking from the back.
  template <std::random_access_iterator It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint32_t>(std::distance(first, last));
    for (std::uint32_t i = n; i > 1; --i) {
      const std::uint32_t j = below(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937 engine_;
};

// Independent stream seed for (base, stream) pairs, via splitmix64.
inline std::uint32_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base * 0x9E3779B97F4A7C15ull + stream + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z ^= z >> 31;
  return static_cast<std::uint32_t>(z ^ (z >> 32));
}

// 64-bit FNV-1a, used for content fingerprints and config hashes.
inline std::uint64_t fnv1a(std::string_view bytes,
                           std::uint64_t hash = 0xcbf29ce484222325ull) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

}  // namespace reqlens
