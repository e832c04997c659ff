#pragma once

#include <cstddef>
#include <cstdint>

#include "qcd/math/philox.hpp"

namespace qcd::kernels {

// Lane-per-trial batch width. Each lane owns one philox stream, so scalar and
// SIMD execution of the same lane consume identical draws in identical order.
inline constexpr int kLanes = 4;

struct GammaShape {
  double shape = 1.0;
  double d = 2.0 / 3.0;   // shape - 1/3 (after boosting if shape < 1)
  double c = 0.0;         // 1 / sqrt(9 d)
  double inv_shape = 1.0; // used by the boost step only
  bool boosted = false;   // shape < 1: sample shape+1, scale by u^{1/shape}
};

GammaShape make_gamma_shape(double shape);

struct SamplerSpec {
  enum class Kind { beta, tilted_beta, atoms };
  Kind kind = Kind::beta;

  // beta / tilted_beta
  GammaShape ga, gb;
  double lambda = 0.0;       // exponential tilt of the beta base
  double tilt_anchor = 1.0;  // support point maximizing lambda*x

  // atoms: inverse-cdf tables (not owned; must outlive the spec)
  const double* values = nullptr;
  const double* cdf = nullptr;  // nondecreasing, back() == 1
  std::size_t n_atoms = 0;
};

struct IncrementSpec {
  enum class Kind { affine, beta_llr };
  Kind kind = Kind::affine;
  // affine:   c1*x + c0
  // beta_llr: c1*log(x) + c2*log(1-x) + c0
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
};

// SoA state for kLanes concurrent trials. A lane is active until its
// statistic crosses the threshold (alarm_time latched) or t reaches the cap;
// the driver then reloads the lane with the next trial. Inactive lanes never
// consume randomness, so results are independent of lane placement.
struct BatchLanes {
  std::uint64_t seed = 0;
  std::uint64_t stream[kLanes] = {};
  std::uint64_t counter[kLanes] = {};
  double pending[kLanes] = {};
  std::uint64_t has_pending[kLanes] = {};  // all-ones / zero lane masks
  double stat[kLanes] = {};
  std::int64_t t[kLanes] = {};
  std::int64_t alarm_time[kLanes] = {};  // -1 while unalarmed
  std::uint64_t active[kLanes] = {};
};

struct Backend {
  const char* name;
  // Advance each active lane by at most `steps` observations of the clamped
  // recursion stat' = max(0, stat + inc(x)), latching alarms at stat' >= b.
  void (*advance)(const SamplerSpec&, const IncrementSpec&, double b,
                  std::int64_t cap, int steps, BatchLanes&);
  // One draw per active lane (sampler test hook; same code path as advance).
  void (*sample_lanes)(const SamplerSpec&, BatchLanes&, double* out);
  // m0 = sum w[i] e^{lam(x[i]-shift)}, m1 = sum w[i] x[i] e^{lam(x[i]-shift)}.
  void (*tilted_moments)(const double* x, const double* w, std::size_t n,
                         double lam, double shift, double* m0, double* m1);
};

const Backend& scalar_backend();
const Backend* avx2_backend();  // nullptr when unavailable

// Dispatched once per process: AVX2+FMA when the CPU has them, else scalar.
// QCD_KERNEL=scalar|avx2 overrides (unknown or unsupported values fall back
// to auto detection).
const Backend& active_backend();
bool force_backend(const char* name);  // tests; returns false if unknown

}  // namespace qcd::kernels
