// AVX2 + FMA kernel variants. Each function mirrors the scalar reference in
// sampler.hpp / fastmath.hpp operation for operation, so a lane of the vector
// path is bit-identical to the scalar path on the same stream — the property
// the kernel equivalence tests assert. Rejection loops run all lanes in
// lockstep under masks; a lane only advances its philox counter when it
// actually consumes a draw.

#include "qcd/kernels/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

#include "qcd/kernels/sampler.hpp"
#include "qcd/math/fastmath.hpp"

namespace qcd::kernels {
namespace {

using math::kExpC;
using math::kLogC;

inline __m256i all_ones() { return _mm256_set1_epi64x(-1); }

inline bool any(__m256i mask) { return !_mm256_testz_si256(mask, mask); }

inline __m256i andnot(__m256i mask, __m256i v) { return _mm256_andnot_si256(mask, v); }

inline __m256d blendv(__m256d a, __m256d b, __m256i mask) {
  return _mm256_blendv_pd(a, b, _mm256_castsi256_pd(mask));
}

inline __m256i blendv_i(__m256i a, __m256i b, __m256i mask) {
  return _mm256_blendv_epi8(a, b, mask);
}

inline __m256i mask_of(__m256d cmp) { return _mm256_castpd_si256(cmp); }

// int64 lanes (|v| < 2^51) -> double lanes
inline __m256d i64_to_pd(__m256i v) {
  const __m256i magic = _mm256_set1_epi64x(0x4338000000000000ll);  // 1.5*2^52
  const __m256d shifted = _mm256_castsi256_pd(_mm256_add_epi64(v, magic));
  return _mm256_sub_pd(shifted, _mm256_set1_pd(0x1.8p52));
}

// double lanes holding integers (|v| < 2^51) -> int64 lanes
inline __m256i pd_to_i64(__m256d v) {
  const __m256d shifted = _mm256_add_pd(v, _mm256_set1_pd(0x1.8p52));
  const __m256i bits = _mm256_castpd_si256(shifted);
  const __m256i low = _mm256_and_si256(bits, _mm256_set1_epi64x((1ll << 52) - 1));
  return _mm256_sub_epi64(low, _mm256_set1_epi64x(1ll << 51));
}

inline __m256i sra1_epi64(__m256i v) {  // arithmetic >> 1
  const __m256i logical = _mm256_srli_epi64(v, 1);
  const __m256i sign = _mm256_and_si256(v, _mm256_set1_epi64x(0x8000000000000000ull));
  return _mm256_or_si256(logical, sign);
}

inline __m256d scale_pow2(__m256d v, __m256i k) {
  const __m256i k1 = sra1_epi64(k);
  const __m256i k2 = _mm256_sub_epi64(k, k1);
  const __m256i bias = _mm256_set1_epi64x(1023);
  const __m256d s1 = _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_add_epi64(k1, bias), 52));
  const __m256d s2 = _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_add_epi64(k2, bias), 52));
  return _mm256_mul_pd(_mm256_mul_pd(v, s1), s2);
}

__m256d vexp_pd(__m256d x) {
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(math::kLog2E)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fmadd_pd(n, _mm256_set1_pd(-math::kLn2Hi), x);
  r = _mm256_fmadd_pd(n, _mm256_set1_pd(-math::kLn2Lo), r);
  __m256d p = _mm256_set1_pd(kExpC[13]);
  for (int i = 12; i >= 0; --i) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(kExpC[i]));
  __m256d out = scale_pow2(p, pd_to_i64(n));
  const __m256i overflow = mask_of(_mm256_cmp_pd(x, _mm256_set1_pd(709.782712893384), _CMP_GE_OQ));
  const __m256i underflow = mask_of(_mm256_cmp_pd(x, _mm256_set1_pd(-745.133219101941), _CMP_LE_OQ));
  const __m256i unordered = mask_of(_mm256_cmp_pd(x, x, _CMP_UNORD_Q));
  out = blendv(out, _mm256_set1_pd(std::numeric_limits<double>::infinity()), overflow);
  out = blendv(out, _mm256_setzero_pd(), underflow);
  out = blendv(out, x, unordered);
  return out;
}

__m256d vlog_pd(__m256d x) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256i subnormal =
      _mm256_castpd_si256(_mm256_and_pd(_mm256_cmp_pd(x, _mm256_set1_pd(0x1.0p-1022), _CMP_LT_OQ),
                                        _mm256_cmp_pd(x, zero, _CMP_GT_OQ)));
  const __m256d xs = blendv(x, _mm256_mul_pd(x, _mm256_set1_pd(0x1.0p54)), subnormal);
  const __m256i e_extra = _mm256_and_si256(subnormal, _mm256_set1_epi64x(-54));
  const __m256i bits = _mm256_castpd_si256(xs);
  __m256i e = _mm256_add_epi64(
      _mm256_sub_epi64(_mm256_srli_epi64(bits, 52), _mm256_set1_epi64x(1023)), e_extra);
  __m256d m = _mm256_castsi256_pd(
      _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFll)),
                      _mm256_set1_epi64x(0x3FF0000000000000ll)));
  const __m256i fold = mask_of(_mm256_cmp_pd(m, _mm256_set1_pd(math::kSqrt2), _CMP_GT_OQ));
  m = blendv(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), fold);
  e = _mm256_add_epi64(e, _mm256_and_si256(fold, _mm256_set1_epi64x(1)));
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d t = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d w = _mm256_mul_pd(t, t);
  __m256d p = _mm256_set1_pd(kLogC[9]);
  for (int i = 8; i >= 0; --i) p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(kLogC[i]));
  const __m256d s = _mm256_mul_pd(_mm256_set1_pd(2.0), t);
  const __m256d r = _mm256_fmadd_pd(_mm256_mul_pd(s, w), p, s);
  const __m256d ed = i64_to_pd(e);
  __m256d out = _mm256_fmadd_pd(ed, _mm256_set1_pd(math::kLn2Hi),
                                _mm256_fmadd_pd(ed, _mm256_set1_pd(math::kLn2Lo), r));
  const __m256i bad = mask_of(_mm256_or_pd(_mm256_cmp_pd(x, zero, _CMP_LT_OQ),
                                           _mm256_cmp_pd(x, x, _CMP_UNORD_Q)));
  const __m256i is_zero = mask_of(_mm256_cmp_pd(x, zero, _CMP_EQ_OQ));
  const __m256i is_inf =
      mask_of(_mm256_cmp_pd(x, _mm256_set1_pd(std::numeric_limits<double>::infinity()), _CMP_EQ_OQ));
  out = blendv(out, _mm256_set1_pd(std::numeric_limits<double>::quiet_NaN()), bad);
  out = blendv(out, _mm256_set1_pd(-std::numeric_limits<double>::infinity()), is_zero);
  out = blendv(out, _mm256_set1_pd(std::numeric_limits<double>::infinity()), is_inf);
  return out;
}

// ------------------------------------------------------------------ philox

struct LaneRng {
  __m256i stream;       // u64 per lane
  __m256i counter;      // u64 per lane
  __m256d pending;
  __m256i has_pending;  // lane masks
  std::uint32_t key_lo, key_hi;
};

inline __m256d u01_from_bits(__m256i u64bits) {
  const __m256i k = _mm256_srli_epi64(u64bits, 12);
  const __m256d kd = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_or_si256(k, _mm256_set1_epi64x(0x4330000000000000ll))),
      _mm256_set1_pd(0x1.0p52));
  return _mm256_mul_pd(_mm256_add_pd(kd, _mm256_set1_pd(0.5)), _mm256_set1_pd(0x1.0p-52));
}

// One philox4x32-10 block per lane from (counter, stream, key).
inline void philox_block(const LaneRng& rng, __m256d& u0, __m256d& u1) {
  const __m256i lo32 = _mm256_set1_epi64x(0xFFFFFFFFll);
  __m256i x0 = _mm256_and_si256(rng.counter, lo32);
  __m256i x1 = _mm256_srli_epi64(rng.counter, 32);
  __m256i x2 = _mm256_and_si256(rng.stream, lo32);
  __m256i x3 = _mm256_srli_epi64(rng.stream, 32);
  __m256i k0 = _mm256_set1_epi64x(rng.key_lo);
  __m256i k1 = _mm256_set1_epi64x(rng.key_hi);
  const __m256i m0 = _mm256_set1_epi64x(math::kPhiloxM0);
  const __m256i m1 = _mm256_set1_epi64x(math::kPhiloxM1);
  for (int round = 0; round < 10; ++round) {
    const __m256i p0 = _mm256_mul_epu32(x0, m0);
    const __m256i p1 = _mm256_mul_epu32(x2, m1);
    const __m256i hi0 = _mm256_srli_epi64(p0, 32);
    const __m256i lo0 = _mm256_and_si256(p0, lo32);
    const __m256i hi1 = _mm256_srli_epi64(p1, 32);
    const __m256i lo1 = _mm256_and_si256(p1, lo32);
    const __m256i nx0 = _mm256_xor_si256(_mm256_xor_si256(hi1, x1), k0);
    const __m256i nx2 = _mm256_xor_si256(_mm256_xor_si256(hi0, x3), k1);
    x0 = nx0;
    x1 = lo1;
    x2 = nx2;
    x3 = lo0;
    k0 = _mm256_and_si256(_mm256_add_epi64(k0, _mm256_set1_epi64x(math::kPhiloxW0)), lo32);
    k1 = _mm256_and_si256(_mm256_add_epi64(k1, _mm256_set1_epi64x(math::kPhiloxW1)), lo32);
  }
  const __m256i a = _mm256_or_si256(_mm256_slli_epi64(x1, 32), x0);
  const __m256i b = _mm256_or_si256(_mm256_slli_epi64(x3, 32), x2);
  u0 = u01_from_bits(a);
  u1 = u01_from_bits(b);
}

// Next uniform for the lanes in `need`; other lanes untouched.
inline __m256d next_u01(LaneRng& rng, __m256i need, __m256d prev) {
  const __m256i take = _mm256_and_si256(need, rng.has_pending);
  __m256d u = blendv(prev, rng.pending, take);
  rng.has_pending = andnot(take, rng.has_pending);
  const __m256i gen = andnot(rng.has_pending, andnot(take, need));
  if (any(gen)) {
    __m256d u0, u1;
    philox_block(rng, u0, u1);
    u = blendv(u, u0, gen);
    rng.pending = blendv(rng.pending, u1, gen);
    rng.has_pending = _mm256_or_si256(rng.has_pending, gen);
    rng.counter =
        _mm256_add_epi64(rng.counter, _mm256_and_si256(gen, _mm256_set1_epi64x(1)));
  }
  return u;
}

// ---------------------------------------------------------------- samplers

const __m256d kOne = {1.0, 1.0, 1.0, 1.0};

__m256d normal_lanes(LaneRng& rng, __m256i need) {
  __m256d z = _mm256_setzero_pd();
  __m256i pending = need;
  while (any(pending)) {
    const __m256d a = next_u01(rng, pending, _mm256_setzero_pd());
    const __m256d b = next_u01(rng, pending, _mm256_setzero_pd());
    const __m256d u = _mm256_fmadd_pd(_mm256_set1_pd(2.0), a, _mm256_set1_pd(-1.0));
    const __m256d v = _mm256_fmadd_pd(_mm256_set1_pd(2.0), b, _mm256_set1_pd(-1.0));
    const __m256d r2 = _mm256_fmadd_pd(u, u, _mm256_mul_pd(v, v));
    const __m256i ok = _mm256_and_si256(
        pending,
        _mm256_and_si256(mask_of(_mm256_cmp_pd(r2, kOne, _CMP_LT_OQ)),
                         mask_of(_mm256_cmp_pd(r2, _mm256_setzero_pd(), _CMP_GT_OQ))));
    const __m256d q = _mm256_div_pd(_mm256_mul_pd(_mm256_set1_pd(-2.0), vlog_pd(r2)), r2);
    z = blendv(z, _mm256_mul_pd(u, _mm256_sqrt_pd(q)), ok);
    pending = andnot(ok, pending);
  }
  return z;
}

__m256d gamma_lanes(LaneRng& rng, const GammaShape& g, __m256i need) {
  __m256d out = _mm256_setzero_pd();
  __m256i todo = need;
  const __m256d d = _mm256_set1_pd(g.d);
  while (any(todo)) {
    const __m256d z = normal_lanes(rng, todo);
    const __m256d t = _mm256_fmadd_pd(_mm256_set1_pd(g.c), z, kOne);
    const __m256d v = _mm256_mul_pd(_mm256_mul_pd(t, t), t);
    const __m256i v_ok =
        _mm256_and_si256(todo, mask_of(_mm256_cmp_pd(v, _mm256_setzero_pd(), _CMP_GT_OQ)));
    const __m256d u = next_u01(rng, v_ok, kOne);  // placeholder 1.0 where unused
    const __m256d z2 = _mm256_mul_pd(z, z);
    const __m256d z4 = _mm256_mul_pd(z2, z2);
    const __m256i squeeze = mask_of(
        _mm256_cmp_pd(u, _mm256_fmadd_pd(_mm256_set1_pd(-0.0331), z4, kOne), _CMP_LT_OQ));
    const __m256d inner = _mm256_add_pd(_mm256_sub_pd(kOne, v), vlog_pd(v));
    const __m256i log_ok = mask_of(_mm256_cmp_pd(
        vlog_pd(u), _mm256_fmadd_pd(d, inner, _mm256_mul_pd(_mm256_set1_pd(0.5), z2)),
        _CMP_LT_OQ));
    const __m256i accept = _mm256_and_si256(v_ok, _mm256_or_si256(squeeze, log_ok));
    out = blendv(out, _mm256_mul_pd(d, v), accept);
    todo = andnot(accept, todo);
  }
  if (g.boosted) {
    const __m256d w = next_u01(rng, need, kOne);
    const __m256d boost = vexp_pd(_mm256_mul_pd(vlog_pd(w), _mm256_set1_pd(g.inv_shape)));
    out = blendv(out, _mm256_mul_pd(out, boost), need);
  }
  return out;
}

__m256d beta_lanes(LaneRng& rng, const SamplerSpec& spec, __m256i need) {
  const __m256d x = gamma_lanes(rng, spec.ga, need);
  const __m256d y = gamma_lanes(rng, spec.gb, need);
  return _mm256_div_pd(x, _mm256_add_pd(x, y));
}

__m256d tilted_beta_lanes(LaneRng& rng, const SamplerSpec& spec, __m256i need) {
  __m256d out = _mm256_setzero_pd();
  __m256i todo = need;
  while (any(todo)) {
    const __m256d x = beta_lanes(rng, spec, todo);
    const __m256d u = next_u01(rng, todo, kOne);
    const __m256d rhs = _mm256_mul_pd(_mm256_set1_pd(spec.lambda),
                                      _mm256_sub_pd(x, _mm256_set1_pd(spec.tilt_anchor)));
    const __m256i accept = _mm256_and_si256(todo, mask_of(_mm256_cmp_pd(vlog_pd(u), rhs, _CMP_LT_OQ)));
    out = blendv(out, x, accept);
    todo = andnot(accept, todo);
  }
  return out;
}

__m256d sample_lanes_masked(LaneRng& rng, const SamplerSpec& spec, __m256i need) {
  switch (spec.kind) {
    case SamplerSpec::Kind::beta:
      return beta_lanes(rng, spec, need);
    case SamplerSpec::Kind::tilted_beta:
      return tilted_beta_lanes(rng, spec, need);
    case SamplerSpec::Kind::atoms:
    default: {
      // table lookups stay scalar; still per-lane masked consumption
      alignas(32) double out[kLanes] = {0, 0, 0, 0};
      alignas(32) std::uint64_t stream[kLanes], counter[kLanes], hasp[kLanes], needm[kLanes];
      alignas(32) double pend[kLanes];
      _mm256_store_si256(reinterpret_cast<__m256i*>(stream), rng.stream);
      _mm256_store_si256(reinterpret_cast<__m256i*>(counter), rng.counter);
      _mm256_store_si256(reinterpret_cast<__m256i*>(hasp), rng.has_pending);
      _mm256_store_si256(reinterpret_cast<__m256i*>(needm), need);
      _mm256_store_pd(pend, rng.pending);
      for (int l = 0; l < kLanes; ++l) {
        if (!needm[l]) continue;
        math::StreamState s;
        s.seed = (static_cast<std::uint64_t>(rng.key_hi) << 32) | rng.key_lo;
        s.stream = stream[l];
        s.counter = counter[l];
        s.pending = pend[l];
        s.has_pending = hasp[l] != 0;
        out[l] = sample_atoms(s, spec);
        counter[l] = s.counter;
        pend[l] = s.pending;
        hasp[l] = s.has_pending ? ~0ull : 0ull;
      }
      rng.counter = _mm256_load_si256(reinterpret_cast<const __m256i*>(counter));
      rng.has_pending = _mm256_load_si256(reinterpret_cast<const __m256i*>(hasp));
      rng.pending = _mm256_load_pd(pend);
      return _mm256_load_pd(out);
    }
  }
}

// ------------------------------------------------------------------ driver

LaneRng load_rng(const BatchLanes& lanes) {
  LaneRng rng;
  rng.stream = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(lanes.stream));
  rng.counter = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(lanes.counter));
  rng.pending = _mm256_loadu_pd(lanes.pending);
  rng.has_pending = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(lanes.has_pending));
  rng.key_lo = static_cast<std::uint32_t>(lanes.seed);
  rng.key_hi = static_cast<std::uint32_t>(lanes.seed >> 32);
  return rng;
}

void store_rng(BatchLanes& lanes, const LaneRng& rng) {
  _mm256_storeu_si256(reinterpret_cast<__m256i*>(lanes.counter), rng.counter);
  _mm256_storeu_pd(lanes.pending, rng.pending);
  _mm256_storeu_si256(reinterpret_cast<__m256i*>(lanes.has_pending), rng.has_pending);
}

__m256d increment_lanes(const IncrementSpec& inc, __m256d x) {
  if (inc.kind == IncrementSpec::Kind::affine)
    return _mm256_fmadd_pd(_mm256_set1_pd(inc.c1), x, _mm256_set1_pd(inc.c0));
  const __m256d lx = vlog_pd(x);
  const __m256d l1mx = vlog_pd(_mm256_sub_pd(kOne, x));
  return _mm256_fmadd_pd(_mm256_set1_pd(inc.c1), lx,
                         _mm256_fmadd_pd(_mm256_set1_pd(inc.c2), l1mx, _mm256_set1_pd(inc.c0)));
}

void advance_avx2(const SamplerSpec& spec, const IncrementSpec& inc, double b,
                  std::int64_t cap, int steps, BatchLanes& lanes) {
  LaneRng rng = load_rng(lanes);
  __m256i active = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(lanes.active));
  __m256d stat = _mm256_loadu_pd(lanes.stat);
  __m256i t = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(lanes.t));
  __m256i alarm = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(lanes.alarm_time));
  const __m256d bv = _mm256_set1_pd(b);
  const __m256i capv = _mm256_set1_epi64x(cap);
  for (int k = 0; k < steps && any(active); ++k) {
    const __m256d x = sample_lanes_masked(rng, spec, active);
    const __m256d next =
        _mm256_max_pd(_mm256_setzero_pd(), _mm256_add_pd(stat, increment_lanes(inc, x)));
    stat = blendv(stat, next, active);
    t = _mm256_add_epi64(t, _mm256_and_si256(active, _mm256_set1_epi64x(1)));
    const __m256i crossed =
        _mm256_and_si256(active, mask_of(_mm256_cmp_pd(stat, bv, _CMP_GE_OQ)));
    alarm = blendv_i(alarm, t, crossed);
    active = andnot(crossed, active);
    const __m256i capped = _mm256_and_si256(
        active, _mm256_xor_si256(_mm256_cmpgt_epi64(capv, t), all_ones()));  // t >= cap
    active = andnot(capped, active);
  }
  store_rng(lanes, rng);
  _mm256_storeu_si256(reinterpret_cast<__m256i*>(lanes.active), active);
  _mm256_storeu_pd(lanes.stat, stat);
  _mm256_storeu_si256(reinterpret_cast<__m256i*>(lanes.t), t);
  _mm256_storeu_si256(reinterpret_cast<__m256i*>(lanes.alarm_time), alarm);
}

void sample_lanes_avx2(const SamplerSpec& spec, BatchLanes& lanes, double* out) {
  LaneRng rng = load_rng(lanes);
  const __m256i active = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(lanes.active));
  const __m256d x = sample_lanes_masked(rng, spec, active);
  alignas(32) double buf[kLanes];
  _mm256_store_pd(buf, x);
  alignas(32) std::uint64_t am[kLanes];
  _mm256_store_si256(reinterpret_cast<__m256i*>(am), active);
  for (int l = 0; l < kLanes; ++l)
    if (am[l]) out[l] = buf[l];
  store_rng(lanes, rng);
}

void tilted_moments_avx2(const double* x, const double* w, std::size_t n, double lam,
                         double shift, double* m0, double* m1) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  const __m256d lamv = _mm256_set1_pd(lam);
  const __m256d shiftv = _mm256_set1_pd(shift);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d wv = _mm256_loadu_pd(w + i);
    const __m256d t = _mm256_sub_pd(xv, shiftv);
    const __m256d e = _mm256_mul_pd(wv, vexp_pd(_mm256_mul_pd(lamv, t)));
    acc0 = _mm256_add_pd(acc0, e);
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(e, xv));
  }
  alignas(32) double a[4], bb[4];
  _mm256_store_pd(a, acc0);
  _mm256_store_pd(bb, acc1);
  for (; i < n; ++i) {  // tail in the matching lane slots, scalar exp == vexp
    const double t = x[i] - shift;
    const double e = w[i] * math::exp_pd(lam * t);
    a[i & 3] += e;
    bb[i & 3] += e * x[i];
  }
  *m0 = (a[0] + a[1]) + (a[2] + a[3]);
  *m1 = (bb[0] + bb[1]) + (bb[2] + bb[3]);
}

}  // namespace

const Backend* avx2_backend() {
  static const Backend backend = {"avx2", advance_avx2, sample_lanes_avx2,
                                  tilted_moments_avx2};
  static const Backend* chosen =
      (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) ? &backend : nullptr;
  return chosen;
}

}  // namespace qcd::kernels

#else  // !(__AVX2__ && __FMA__)

namespace qcd::kernels {
const Backend* avx2_backend() { return nullptr; }
}  // namespace qcd::kernels

#endif
