#pragma once

#include <array>
#include <cstdint>

namespace rainsim {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
// easy as 1, 2, 3"). Pure: the same (counter, key) always yields the same block.
PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key);

// Purposes a random substream can serve. Part of the key derivation, so two
// purposes never share draws even with identical counters.
enum class Stream : std::uint32_t {
  Scene = 1,
  Wake = 2,
  Emission = 3,
  Intercept = 4,
  Dropoff = 5,
  SprayIntensity = 6,
  Test = 100,
};

std::uint64_t splitmix64(std::uint64_t x);

// Key for (seed, purpose, sub-index). `sub` is typically a frame index or a
// vehicle id.
PhiloxKey derive_key(std::uint64_t seed, Stream stream, std::uint64_t sub = 0);

// Maps 64 random bits to a double in [0, 1) with 53 bits of resolution.
inline double bits_to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Sequential generator over a counter-based stream. The upper two counter
// words are fixed per stream (e.g. ray coordinates); the lower 64 bits count
// blocks. Draw order is the only state.
class RandomStream {
 public:
  RandomStream(PhiloxKey key, std::uint32_t tag_hi = 0, std::uint32_t tag_lo = 0)
      : key_(key), tag_hi_(tag_hi), tag_lo_(tag_lo) {}

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // [0, 1)
  double uniform() { return bits_to_unit(next_u64()); }
  // [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Integer in [lo, hi], inclusive. Lemire-free modulo: bias is < 2^-32 for
  // the small ranges used here.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  // Standard normal via Box-Muller; consumes two uniforms per call.
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }
  // Exponential with the given mean.
  double exponential(double mean);

  std::uint64_t blocks_used() const { return block_; }

 private:
  void refill();

  PhiloxKey key_;
  std::uint32_t tag_hi_;
  std::uint32_t tag_lo_;
  std::uint64_t block_ = 0;
  PhiloxCounter buffer_{};
  int buffered_ = 0;
};

// Stateless single draw in [0, 1) for the cell identified by four 32-bit
// coordinates. Used where draw order must not matter (per-ray, per-candidate).
inline double unit_at(PhiloxKey key, std::uint32_t a, std::uint32_t b, std::uint32_t c,
                      std::uint32_t d) {
  const PhiloxCounter out = philox4x32({a, b, c, d}, key);
  return bits_to_unit((static_cast<std::uint64_t>(out[0]) << 32) | out[1]);
}

}  // namespace rainsim
