#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace nlmc {

/// SplitMix64 finalizer applied to base + (label + 1) * 0x9E3779B97F4A7C15.
///
/// Used for every seed derivation in the project: per-chain streams inside a
/// run and per-repeat seeds of a batch of runs.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t label);

/// Random source owned by exactly one chain.
///
/// uniform() is built from the top 53 bits of a 64-bit Mersenne twister and
/// lies in the open interval (0, 1). normal() uses the Marsaglia polar method;
/// the spare variate is cached in the object, so the sequence of draws depends
/// only on the sequence of calls made on this instance.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal();

  /// Uniform index in [0, n). Consumes one uniform draw.
  std::size_t index(std::size_t n) {
    auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nlmc
