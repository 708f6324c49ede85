#include "ogmp/rng.hpp"

#include <cmath>

namespace ogmp {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(uint64_t seed) : seed_(seed), gen_(splitmix64(seed)) {}

RngStream RngStream::substream(uint64_t id) const {
  return RngStream(splitmix64(seed_ ^ splitmix64(id + 0x51ED2701FFULL)));
}

uint64_t RngStream::next_u64() { return gen_(); }

double RngStream::uniform() {
  // 53 random bits -> [0, 1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

int64_t RngStream::uniform_int(int64_t lo, int64_t hi) {
  const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  // Modulo bias is < 2^-40 for the spans used here (all << 2^24).
  return lo + static_cast<int64_t>(next_u64() % span);
}

double RngStream::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  // Box-Muller on (0,1] x [0,1).
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

}  // namespace ogmp
