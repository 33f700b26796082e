#pragma once

#include <cstdint>
#include <limits>

namespace nettomo {

/// Independent random streams derived from one root seed.
enum class Stream : std::uint64_t {
  topology = 1,
  rates = 2,
  diversions = 3,
  traffic = 4,
  routes = 5,
  observed_edges = 6,
  estimator_init = 7,
  trial_arm = 8,
  null_draws = 9,
};

/// Counter-based 64-bit generator ("keyed SplitMix64").
///
/// The n-th output is a pure function of (key, n): the SplitMix64 finalizer
/// applied to n * golden-gamma xor key, then re-mixed with a second key word.
/// Streams are addressed by (root seed, Stream, index) so one component of a
/// trial can be regenerated without replaying the others. Satisfies
/// UniformRandomBitGenerator, so it plugs into <random> distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0)
      : key_(key), key2_(mix(key ^ 0xD1B54A32D192ED03ULL)), counter_(counter) {}

  static CounterRng substream(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
    std::uint64_t k = mix(seed + 0x9E3779B97F4A7C15ULL);
    k = mix(k ^ (static_cast<std::uint64_t>(stream) * 0xBF58476D1CE4E5B9ULL));
    k = mix(k ^ (index * 0x94D049BB133111EBULL + 0x632BE59BD9B4E019ULL));
    return CounterRng(k);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t z = mix((counter_++ * 0x9E3779B97F4A7C15ULL) ^ key_);
    return mix(z + key2_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
  std::uint64_t key2_;
  std::uint64_t counter_;
};

}  // namespace nettomo
