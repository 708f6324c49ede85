#pragma once

#include <cstdint>
#include <random>

namespace ogmp {

/// Deterministic random stream. All randomness in the project flows through
/// this wrapper: the mt19937_64 engine is fully specified by the standard and
/// the variate transforms below are hand-rolled, so identical seeds give
/// identical draws on every platform and compiler.
class RngStream {
 public:
  explicit RngStream(uint64_t seed);

  /// Independent child stream; deterministic function of (seed, id).
  RngStream substream(uint64_t id) const;

  uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi] inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi);
  /// Standard normal via Box-Muller.
  double normal();

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  std::mt19937_64 gen_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

uint64_t splitmix64(uint64_t x);

}  // namespace ogmp
