#ifndef MOMENTEST_RNG_HPP
#define MOMENTEST_RNG_HPP

// Counter-based generator. Every draw is a pure function of (key, counter):
//
//   mix(z)          = SplitMix64 finalizer
//   bits(key, c)    = mix(key + (c + 1) * 0x9e3779b97f4a7c15)
//   derive(seed, i) = mix(mix(seed) ^ (i + 1) * 0xd1b54a32d192ed03)
//
// bits(key, c) is exactly the c-th output of a SplitMix64 stream seeded with
// `key`, so each row key owns an independent SplitMix64 sequence.

#include <cstdint>

namespace momentest::rng {

inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t bits(std::uint64_t key, std::uint64_t counter) noexcept {
  return mix(key + (counter + 1) * kGamma);
}

/// Key of stream `index` under `master`.
constexpr std::uint64_t derive(std::uint64_t master, std::uint64_t index) noexcept {
  return mix(mix(master) ^ ((index + 1) * 0xd1b54a32d192ed03ULL));
}

/// Uniform on the open interval (0, 1): the top 53 bits, offset by half an ulp.
constexpr double uniform(std::uint64_t key, std::uint64_t counter) noexcept {
  return (static_cast<double>(bits(key, counter) >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal quantile, Wichura's AS 241 (PPND16), relative accuracy
/// about 1e-16. Requires 0 < p < 1.
double normal_quantile(double p) noexcept;

}  // namespace momentest::rng

#endif
