#pragma once

#include <cstdint>

namespace cgo2d {

// Counter-based splittable generator (SplitMix64). Every draw is a pure
// function of (seed, counter), so scenario runs are reproducible across
// platforms and check evaluation order.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [a,b)
  double uniform(double a, double b) { return a + (b - a) * next_double(); }

  // independent stream derived from this one's seed and a stream id
  SplitMix64 split(std::uint64_t stream) const {
    SplitMix64 g(state_ ^ (0x5851f42d4c957f2dULL * (stream + 1)));
    g.next_u64();
    return g;
  }

 private:
  std::uint64_t state_;
};

}  // namespace cgo2d
