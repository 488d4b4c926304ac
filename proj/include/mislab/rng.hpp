#pragma once

#include <cstdint>

namespace mislab {

// SplitMix64. Streams are keyed so that a sample's draws depend only on
// (seed, disk, sample) and not on scheduling.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static SplitMix64 stream(std::uint64_t seed, std::uint64_t disk, std::uint64_t sample) {
    std::uint64_t s = mix(seed + 0x9e3779b97f4a7c15ULL);
    s = mix(s ^ (disk + 0x632be59bd9b4e019ULL));
    s = mix(s ^ (sample + 0x8cb92ba72f3d8dd7ULL));
    return SplitMix64(s);
  }

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Uniform in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace mislab
