#pragma once

// Counter-style random streams.
//
// Every trajectory owns an independent SplitMix64 stream. The stream seed of
// trajectory i under a master seed m is split(m, i):
//
//   z = m + (i + 1) * 0x9E3779B97F4A7C15
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   split = z ^ (z >> 31)
//
// i.e. the SplitMix64 finalizer applied to the (i+1)-th Weyl counter value.
// Outputs therefore depend only on (m, i), never on scheduling.

#include <cstdint>
#include <limits>

namespace aerogel {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t split(std::uint64_t master_seed,
                              std::uint64_t index) noexcept {
  return mix64(master_seed + (index + 1) * kGoldenGamma);
}

//! SplitMix64 stream. Satisfies std::uniform_random_bit_generator.
class SplitMix64 {
public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  //! Uniform variate on the open interval (0,1) with 53-bit resolution.
  //! A raw 0 is redrawn; 1 cannot occur.
  double uniform_open() noexcept {
    for (;;) {
      const std::uint64_t bits = (*this)() >> 11;
      if (bits != 0)
        return static_cast<double>(bits) * 0x1.0p-53;
    }
  }

private:
  std::uint64_t state_;
};

} // namespace aerogel
