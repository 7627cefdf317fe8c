#pragma once

#include <cstdint>

namespace nlrl {

/// SplitMix64 (Steele, Lea & Flood 2014). State advances by the golden-ratio
/// increment 0x9E3779B97F4A7C15; output is mixed with multipliers
/// 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB and shifts 30/27/31.
/// Every consumer in this project draws from this generator so datasets,
/// initializations and shuffles are reproducible across implementations.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept { return next(); }

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) from the top 53 bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound) by modulo reduction (bias below 2^-40 for
  /// the bounds used here).
  std::uint64_t below(std::uint64_t bound) noexcept { return next() % bound; }

 private:
  std::uint64_t state_;
};

/// Derives an independent stream seed from (base, index).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
  SplitMix64 mixer(base ^ (index * 0xD1B54A32D192ED03ULL));
  return mixer.next();
}

}  // namespace nlrl
