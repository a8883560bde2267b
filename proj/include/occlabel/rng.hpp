#pragma once

#include <cstdint>

namespace occlabel {

/// Counter-based 64-bit generator. Output n (n = 1, 2, ...) is
/// splitmix64_mix(seed + n * 0x9E3779B97F4A7C15). All draws used by the
/// library (doubles, bounded integers, normals) are defined on top of this
/// so that fixtures are reproducible in any language.
class CounterRng {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() { return mix(seed_ + (++counter_) * kGamma); }

  /// Uniform in [0, 1): top 53 bits scaled by 2^-53.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound) by Lemire's multiply-shift with rejection.
  std::uint64_t bounded(std::uint64_t bound);

  /// Standard normal via Box-Muller (cosine branch only, two draws per call).
  double normal();

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Stream seed for a sub-task (e.g. one frame): mix(seed ^ mix(stream + gamma)).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace occlabel
