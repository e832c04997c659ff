#pragma once

#include <cmath>

#include "qcd/kernels/kernels.hpp"
#include "qcd/math/fastmath.hpp"
#include "qcd/math/philox.hpp"

// Scalar reference sampler. This is both the public sampling path (through
// RngStream) and the scalar backend's inner loop; the AVX2 backend mirrors it
// per lane. Every arithmetic expression here is written in the exact form the
// SIMD code uses (explicit fma, pinned association) — do not "simplify".

namespace qcd::kernels {

// One standard normal via the Marsaglia polar method. The second point of
// the accepted pair is deliberately discarded: a pair cache would make lane
// consumption depend on call history, which the batch kernels avoid.
inline double sample_normal(math::StreamState& s) {
  for (;;) {
    const double u = std::fma(2.0, math::next_u01(s), -1.0);
    const double v = std::fma(2.0, math::next_u01(s), -1.0);
    const double r2 = std::fma(u, u, v * v);
    if (r2 < 1.0 && r2 > 0.0) {
      const double q = (-2.0 * math::log_pd(r2)) / r2;
      return u * std::sqrt(q);
    }
  }
}

// Marsaglia & Tsang (2000) rejection sampler; shapes < 1 boost through
// shape+1 and scale by u^{1/shape}.
inline double sample_gamma(math::StreamState& s, const GammaShape& g) {
  for (;;) {
    const double z = sample_normal(s);
    const double t = std::fma(g.c, z, 1.0);
    const double v = (t * t) * t;
    if (v <= 0.0) continue;
    const double u = math::next_u01(s);
    const double z2 = z * z;
    const double z4 = z2 * z2;
    bool accept = u < std::fma(-0.0331, z4, 1.0);
    if (!accept) {
      const double inner = (1.0 - v) + math::log_pd(v);
      accept = math::log_pd(u) < std::fma(g.d, inner, 0.5 * z2);
    }
    if (accept) {
      double out = g.d * v;
      if (g.boosted) {
        const double w = math::next_u01(s);
        out *= math::exp_pd(math::log_pd(w) * g.inv_shape);
      }
      return out;
    }
  }
}

inline double sample_beta(math::StreamState& s, const GammaShape& ga,
                          const GammaShape& gb) {
  const double x = sample_gamma(s, ga);
  const double y = sample_gamma(s, gb);
  return x / (x + y);
}

// Exponentially tilted beta, by rejection from the base beta: accept with
// probability e^{lambda (x - anchor)} <= 1 where anchor maximizes lambda*x.
inline double sample_tilted_beta(math::StreamState& s, const SamplerSpec& spec) {
  for (;;) {
    const double x = sample_beta(s, spec.ga, spec.gb);
    const double u = math::next_u01(s);
    const double rhs = spec.lambda * (x - spec.tilt_anchor);
    if (math::log_pd(u) < rhs) return x;
  }
}

inline double sample_atoms(math::StreamState& s, const SamplerSpec& spec) {
  const double u = math::next_u01(s);
  // first index with cdf[i] >= u
  std::size_t lo = 0, hi = spec.n_atoms - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (spec.cdf[mid] >= u)
      hi = mid;
    else
      lo = mid + 1;
  }
  return spec.values[lo];
}

inline double sample_one(math::StreamState& s, const SamplerSpec& spec) {
  switch (spec.kind) {
    case SamplerSpec::Kind::beta:
      return sample_beta(s, spec.ga, spec.gb);
    case SamplerSpec::Kind::tilted_beta:
      return sample_tilted_beta(s, spec);
    case SamplerSpec::Kind::atoms:
    default:
      return sample_atoms(s, spec);
  }
}

inline double increment_of(const IncrementSpec& inc, double x) {
  if (inc.kind == IncrementSpec::Kind::affine) return std::fma(inc.c1, x, inc.c0);
  const double lx = math::log_pd(x);
  const double l1mx = math::log_pd(1.0 - x);
  return std::fma(inc.c1, lx, std::fma(inc.c2, l1mx, inc.c0));
}

}  // namespace qcd::kernels
