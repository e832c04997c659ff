#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

// Branch-poor exp/log with a pinned operation order. The AVX2 kernels mirror
// these functions op for op (same coefficients, same fma placement), which is
// what makes the scalar and SIMD sampler paths bit-identical. Accuracy is a
// few ulp; the tests compare against libm over wide ranges.

namespace qcd::math {

inline constexpr double kLog2E = 1.4426950408889634074;    // 1/ln 2
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;  // fdlibm split
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kSqrt2 = 1.4142135623730951;

// e^r on |r| <= ln2/2 as a degree-13 Taylor polynomial: truncation error
// ~4e-18 relative, well under the rounding noise of the Horner chain.
inline constexpr double kExpC[14] = {
    1.0,
    1.0,
    1.0 / 2,
    1.0 / 6,
    1.0 / 24,
    1.0 / 120,
    1.0 / 720,
    1.0 / 5040,
    1.0 / 40320,
    1.0 / 362880,
    1.0 / 3628800,
    1.0 / 39916800,
    1.0 / 479001600,
    1.0 / 6227020800.0,
};

// 2*atanh(t) tail: log(m) = 2t + 2t*w*P(w), w = t^2, t = (m-1)/(m+1).
// Coefficients are the exact series 1/3, 1/5, ..., 1/21; |t| <= 0.1716 keeps
// the truncated tail below 5e-18 relative.
inline constexpr double kLogC[10] = {
    1.0 / 3,  1.0 / 5,  1.0 / 7,  1.0 / 9,  1.0 / 11,
    1.0 / 13, 1.0 / 15, 1.0 / 17, 1.0 / 19, 1.0 / 21,
};

// 2^k for integer k in [-1075, 1025] via two exact power-of-two factors.
// The arithmetic shift (not /2) matches the AVX2 emulation exactly.
inline double scale_pow2(double v, std::int64_t k) {
  const std::int64_t k1 = k >> 1;
  const std::int64_t k2 = k - k1;
  const double s1 = std::bit_cast<double>(static_cast<std::uint64_t>(k1 + 1023) << 52);
  const double s2 = std::bit_cast<double>(static_cast<std::uint64_t>(k2 + 1023) << 52);
  return (v * s1) * s2;
}

inline double exp_pd(double x) {
  if (std::isnan(x)) return x;
  if (x >= 709.782712893384) return std::numeric_limits<double>::infinity();
  if (x <= -745.133219101941) return 0.0;
  const double n = std::nearbyint(x * kLog2E);
  double r = std::fma(n, -kLn2Hi, x);
  r = std::fma(n, -kLn2Lo, r);
  double p = kExpC[13];
  for (int i = 12; i >= 0; --i) p = std::fma(p, r, kExpC[i]);
  return scale_pow2(p, static_cast<std::int64_t>(n));
}

// Natural log; x < 0 -> NaN, x == 0 -> -inf. Subnormals are prescaled.
inline double log_pd(double x) {
  if (std::isnan(x) || x < 0.0) return std::numeric_limits<double>::quiet_NaN();
  if (x == 0.0) return -std::numeric_limits<double>::infinity();
  if (std::isinf(x)) return x;
  std::int64_t e_extra = 0;
  if (x < 0x1.0p-1022) {
    x *= 0x1.0p54;
    e_extra = -54;
  }
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  std::int64_t e = static_cast<std::int64_t>(bits >> 52) - 1023 + e_extra;
  double m = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFull) | 0x3FF0000000000000ull);
  if (m > kSqrt2) {
    m *= 0.5;
    e += 1;
  }
  const double t = (m - 1.0) / (m + 1.0);
  const double w = t * t;
  double p = kLogC[9];
  for (int i = 8; i >= 0; --i) p = std::fma(p, w, kLogC[i]);
  const double s = 2.0 * t;
  const double r = std::fma(s * w, p, s);
  const double ed = static_cast<double>(e);
  return std::fma(ed, kLn2Hi, std::fma(ed, kLn2Lo, r));
}

}  // namespace qcd::math
