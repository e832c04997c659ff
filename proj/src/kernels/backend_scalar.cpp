#include <algorithm>
#include <cmath>

#include "qcd/kernels/kernels.hpp"
#include "qcd/kernels/sampler.hpp"

namespace qcd::kernels {

GammaShape make_gamma_shape(double shape) {
  GammaShape g;
  g.shape = shape;
  g.boosted = shape < 1.0;
  const double eff = g.boosted ? shape + 1.0 : shape;
  g.d = eff - 1.0 / 3.0;
  g.c = 1.0 / std::sqrt(9.0 * g.d);
  g.inv_shape = 1.0 / shape;
  return g;
}

namespace {

math::StreamState lane_state(const BatchLanes& lanes, int l) {
  math::StreamState s;
  s.seed = lanes.seed;
  s.stream = lanes.stream[l];
  s.counter = lanes.counter[l];
  s.pending = lanes.pending[l];
  s.has_pending = lanes.has_pending[l] != 0;
  return s;
}

void store_lane(BatchLanes& lanes, int l, const math::StreamState& s) {
  lanes.counter[l] = s.counter;
  lanes.pending[l] = s.pending;
  lanes.has_pending[l] = s.has_pending ? ~0ull : 0ull;
}

void advance_scalar(const SamplerSpec& spec, const IncrementSpec& inc, double b,
                    std::int64_t cap, int steps, BatchLanes& lanes) {
  for (int l = 0; l < kLanes; ++l) {
    if (!lanes.active[l]) continue;
    math::StreamState s = lane_state(lanes, l);
    double stat = lanes.stat[l];
    std::int64_t t = lanes.t[l];
    bool active = true;
    for (int k = 0; k < steps && active; ++k) {
      const double x = sample_one(s, spec);
      stat = std::max(0.0, stat + increment_of(inc, x));
      ++t;
      if (stat >= b) {
        lanes.alarm_time[l] = t;
        active = false;
      } else if (t >= cap) {
        active = false;
      }
    }
    lanes.stat[l] = stat;
    lanes.t[l] = t;
    lanes.active[l] = active ? ~0ull : 0ull;
    store_lane(lanes, l, s);
  }
}

void sample_lanes_scalar(const SamplerSpec& spec, BatchLanes& lanes, double* out) {
  for (int l = 0; l < kLanes; ++l) {
    if (!lanes.active[l]) continue;
    math::StreamState s = lane_state(lanes, l);
    out[l] = sample_one(s, spec);
    store_lane(lanes, l, s);
  }
}

// Blocked into four accumulators combined as (a0+a1)+(a2+a3) so the AVX2
// horizontal reduction associates identically.
void tilted_moments_scalar(const double* x, const double* w, std::size_t n,
                           double lam, double shift, double* m0, double* m1) {
  double a[4] = {0, 0, 0, 0};
  double b[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const double t = x[i] - shift;
    const double e = w[i] * math::exp_pd(lam * t);
    a[i & 3] += e;
    b[i & 3] += e * x[i];
  }
  *m0 = (a[0] + a[1]) + (a[2] + a[3]);
  *m1 = (b[0] + b[1]) + (b[2] + b[3]);
}

}  // namespace

const Backend& scalar_backend() {
  static const Backend backend = {"scalar", advance_scalar, sample_lanes_scalar,
                                  tilted_moments_scalar};
  return backend;
}

}  // namespace qcd::kernels
