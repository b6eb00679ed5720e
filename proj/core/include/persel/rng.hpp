#pragma once

#include <cstdint>
#include <string_view>

namespace persel::nd {

/// Deterministic PRNG with named substreams. Everything derives from one
/// root seed; substreams are keyed by name so shuffling, negative sampling,
/// dropout and init draw from independent, reproducible streams.
///
/// The generator is splitmix64-seeded xoshiro256**, fully specified, so runs
/// are bit-identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent stream derived from this stream's seed and a label.
  Rng substream(std::string_view name) const;
  /// Independent stream derived from this stream's seed and an index
  /// (used for per-epoch redraws).
  Rng fork(std::uint64_t k) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n), unbiased. n must be positive.
  std::int64_t below(std::int64_t n);
  /// Standard normal via Box-Muller (deterministic draw order).
  double normal();

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t s_[4] = {0, 0, 0, 0};
  bool have_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace persel::nd
