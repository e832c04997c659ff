#pragma once

#include <array>
#include <cstdint>

namespace qcd::math {

// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3", SC'11). Verified against the Random123
// known-answer vectors in the kernel tests. Counter-based means a block of
// randomness is a pure function of (key, counter): parallel streams never
// share state and any draw can be recomputed from its index.

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;  // golden ratio
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;  // sqrt(3) - 1

inline std::array<std::uint32_t, 4> philox4x32_10(
    std::array<std::uint32_t, 4> x, std::array<std::uint32_t, 2> key) {
  std::uint32_t k0 = key[0];
  std::uint32_t k1 = key[1];
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * x[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * x[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    x = {hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  return x;
}

// One stream = one (seed, stream id) pair. The 128-bit philox counter is
// split (draw counter, stream id); the 64-bit key is the seed. Each block
// yields two doubles; `half` tracks the unconsumed one.
struct StreamState {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t counter = 0;  // next block index
  double pending = 0.0;
  bool has_pending = false;
};

// 52 random bits k -> (k + 1/2) * 2^-52, an exactly representable point in
// the open interval (0,1). Zero-free so log(u) is always finite.
inline double u01_from_bits(std::uint64_t bits) {
  const double k = static_cast<double>(bits >> 12);
  return (k + 0.5) * 0x1.0p-52;
}

inline void philox_block(std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t counter, double& u0, double& u1) {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed),
                                            static_cast<std::uint32_t>(seed >> 32)};
  const auto out = philox4x32_10(ctr, key);
  const std::uint64_t a = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  const std::uint64_t b = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  u0 = u01_from_bits(a);
  u1 = u01_from_bits(b);
}

inline double next_u01(StreamState& s) {
  if (s.has_pending) {
    s.has_pending = false;
    return s.pending;
  }
  double u0, u1;
  philox_block(s.seed, s.stream, s.counter, u0, u1);
  ++s.counter;
  s.pending = u1;
  s.has_pending = true;
  return u0;
}

}  // namespace qcd::math
