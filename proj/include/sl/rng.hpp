#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace sl {

// 64-bit FNV-1a over a canonical string. Replicate seeds are derived this
// way so results are stable across platforms and independent of worker
// scheduling.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace detail {

// SplitMix64 output function.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

}  // namespace detail

// Combine a seed with an integer tag into a new stream seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return detail::mix64(seed + 0x632be59bd9b4e019ull + tag * detail::kGolden);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  return derive_seed(seed, fnv1a64(tag));
}

// Counter-based generator: output k = mix64(seed + k * golden). Streams for
// subtasks (trees, folds, candidates) come from fork(), never from sharing a
// generator, so any parallel schedule reproduces the same draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : base_(seed) {}

  std::uint64_t next_u64() { return detail::mix64(base_ + (++ctr_) * detail::kGolden); }

  // In [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // In (0, 1]; safe as a log() argument.
  double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r = next_u64();
    while (r >= limit) r = next_u64();
    return r % n;
  }

  // Standard normal via Box-Muller, spare value cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Independent child stream; does not disturb this stream's counter.
  Rng fork(std::uint64_t tag) const { return Rng(derive_seed(base_, tag)); }
  Rng fork(std::string_view tag) const { return Rng(derive_seed(base_, tag)); }

  std::uint64_t seed() const { return base_; }

 private:
  std::uint64_t base_;
  std::uint64_t ctr_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sl
