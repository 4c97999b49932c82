#if defined(__aarch64__)

#include <arm_neon.h>

#include "backends.hpp"

namespace reachcert::kernels::neon {

namespace {

// Compare+select keeps the x86 tie/NaN convention of elem::min2/max2;
// vminq_f64 would propagate NaN instead.
inline float64x2_t vmin2(float64x2_t a, float64x2_t b) { return vbslq_f64(vcltq_f64(a, b), a, b); }
inline float64x2_t vmax2(float64x2_t a, float64x2_t b) { return vbslq_f64(vcgtq_f64(a, b), a, b); }
inline float64x2_t vclamp(float64x2_t v, float64x2_t lo, float64x2_t hi) { return vmin2(vmax2(v, lo), hi); }

}  // namespace

void integrate_axis(double* pos, double* vel, const double* acc, size_t n, double dt) {
  const float64x2_t h = vdupq_n_f64(dt);
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t p = vld1q_f64(pos + i);
    const float64x2_t v = vld1q_f64(vel + i);
    const float64x2_t a = vld1q_f64(acc + i);
    vst1q_f64(pos + i, vaddq_f64(p, vmulq_f64(v, h)));
    vst1q_f64(vel + i, vaddq_f64(v, vmulq_f64(a, h)));
  }
  for (; i < n; ++i) {
    pos[i] = pos[i] + vel[i] * dt;
    vel[i] = vel[i] + acc[i] * dt;
  }
}

void clamp(double* v, size_t n, double lo, double hi) {
  const float64x2_t l = vdupq_n_f64(lo);
  const float64x2_t u = vdupq_n_f64(hi);
  size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(v + i, vclamp(vld1q_f64(v + i), l, u));
  for (; i < n; ++i) v[i] = elem::clamp(v[i], lo, hi);
}

void axis_feedback(const double* pos, const double* vel, double goal, double kp, double kd, double lo, double hi,
                   size_t n, double* out) {
  const float64x2_t g = vdupq_n_f64(goal);
  const float64x2_t p_gain = vdupq_n_f64(kp);
  const float64x2_t d_gain = vdupq_n_f64(kd);
  const float64x2_t l = vdupq_n_f64(lo);
  const float64x2_t u = vdupq_n_f64(hi);
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t e = vsubq_f64(vld1q_f64(pos + i), g);
    const float64x2_t raw = vsubq_f64(vnegq_f64(vmulq_f64(p_gain, e)), vmulq_f64(d_gain, vld1q_f64(vel + i)));
    vst1q_f64(out + i, vclamp(raw, l, u));
  }
  for (; i < n; ++i) out[i] = elem::feedback(pos[i], vel[i], goal, kp, kd, lo, hi);
}

void squared_distances(const double* points, size_t stride, size_t count, size_t dim, const double* query,
                       double* out) {
  size_t i = 0;
  for (; i + 2 <= count; i += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (size_t d = 0; d < dim; ++d) {
      const float64x2_t diff = vsubq_f64(vld1q_f64(points + d * stride + i), vdupq_n_f64(query[d]));
      acc = vaddq_f64(acc, vmulq_f64(diff, diff));
    }
    vst1q_f64(out + i, acc);
  }
  for (; i < count; ++i) {
    double acc = 0.0;
    for (size_t d = 0; d < dim; ++d) {
      const double diff = points[d * stride + i] - query[d];
      acc = acc + diff * diff;
    }
    out[i] = acc;
  }
}

void pair_distances(const double* a, const double* b, size_t stride, size_t count, size_t dim, double* out) {
  size_t i = 0;
  for (; i + 2 <= count; i += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (size_t d = 0; d < dim; ++d) {
      const float64x2_t diff = vsubq_f64(vld1q_f64(a + d * stride + i), vld1q_f64(b + d * stride + i));
      acc = vaddq_f64(acc, vmulq_f64(diff, diff));
    }
    vst1q_f64(out + i, vsqrtq_f64(acc));
  }
  for (; i < count; ++i) {
    double acc = 0.0;
    for (size_t d = 0; d < dim; ++d) {
      const double diff = a[d * stride + i] - b[d * stride + i];
      acc = acc + diff * diff;
    }
    out[i] = __builtin_sqrt(acc);
  }
}

double max_value(const double* v, size_t n) {
  if (n < 2) return v[0];
  float64x2_t m2 = vld1q_f64(v);
  size_t i = 2;
  for (; i + 2 <= n; i += 2) m2 = vmax2(vld1q_f64(v + i), m2);
  double m = elem::max2(vgetq_lane_f64(m2, 1), vgetq_lane_f64(m2, 0));
  for (; i < n; ++i) m = elem::max2(v[i], m);
  return m;
}

void min_inplace(double* acc, const double* v, size_t n) {
  size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(acc + i, vmin2(vld1q_f64(acc + i), vld1q_f64(v + i)));
  for (; i < n; ++i) acc[i] = elem::min2(acc[i], v[i]);
}

void weighted_row_sum(const double* weights, const double* rows, size_t k, size_t len, double* out) {
  size_t j = 0;
  for (; j + 2 <= len; j += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (size_t r = 0; r < k; ++r) {
      acc = vaddq_f64(acc, vmulq_f64(vdupq_n_f64(weights[r]), vld1q_f64(rows + r * len + j)));
    }
    vst1q_f64(out + j, acc);
  }
  for (; j < len; ++j) {
    double acc = 0.0;
    for (size_t r = 0; r < k; ++r) acc = acc + weights[r] * rows[r * len + j];
    out[j] = acc;
  }
}

void downwash_margin(const double* ex, const double* ey, const double* ez, const double* ox, const double* oy,
                     const double* oz, size_t n, double scale, double* out) {
  const float64x2_t s = vdupq_n_f64(scale);
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t zero = vdupq_n_f64(0.0);
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t dx = vsubq_f64(vld1q_f64(ex + i), vld1q_f64(ox + i));
    const float64x2_t dy = vsubq_f64(vld1q_f64(ey + i), vld1q_f64(oy + i));
    const float64x2_t dz = vsubq_f64(vld1q_f64(oz + i), vld1q_f64(ez + i));
    const float64x2_t lhs = vaddq_f64(vmulq_f64(dx, dx), vmulq_f64(dy, dy));
    const float64x2_t rhs = vmulq_f64(vaddq_f64(one, vmax2(dz, zero)), s);
    vst1q_f64(out + i, vsubq_f64(lhs, rhs));
  }
  for (; i < n; ++i) out[i] = elem::downwash(ex[i], ey[i], ez[i], ox[i], oy[i], oz[i], scale);
}

void gate_wall_margin(const double* px, const double* py, const double* pz, size_t n, double wall, double* out) {
  const float64x2_t w = vdupq_n_f64(wall);
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t x = vld1q_f64(px + i);
    const float64x2_t y = vld1q_f64(py + i);
    const float64x2_t z = vld1q_f64(pz + i);
    const float64x2_t a = vmin2(vaddq_f64(vsubq_f64(x, y), w), vaddq_f64(vsubq_f64(vnegq_f64(x), y), w));
    const float64x2_t b = vmin2(vaddq_f64(vsubq_f64(z, y), w), vaddq_f64(vsubq_f64(vnegq_f64(z), y), w));
    vst1q_f64(out + i, vmin2(a, b));
  }
  for (; i < n; ++i) out[i] = elem::gate_wall(px[i], py[i], pz[i], wall);
}

void lead_corridor_margin(const double* epx, const double* epy, const double* evy, const double* epz,
                          const double* opy, const double* ovy, size_t n, double half_width, double lead_p,
                          double lead_v, double* out) {
  const float64x2_t hw = vdupq_n_f64(half_width);
  const float64x2_t lp = vdupq_n_f64(lead_p);
  const float64x2_t lv = vdupq_n_f64(lead_v);
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t lead = vsubq_f64(vsubq_f64(vld1q_f64(epy + i), vld1q_f64(opy + i)), lp);
    const float64x2_t speed = vsubq_f64(vsubq_f64(vld1q_f64(evy + i), vld1q_f64(ovy + i)), lv);
    const float64x2_t cx = vsubq_f64(hw, vabsq_f64(vld1q_f64(epx + i)));
    const float64x2_t cz = vsubq_f64(hw, vabsq_f64(vld1q_f64(epz + i)));
    vst1q_f64(out + i, vmin2(vmin2(lead, speed), vmin2(cx, cz)));
  }
  for (; i < n; ++i) {
    out[i] = elem::lead_corridor(epx[i], epy[i], evy[i], epz[i], opy[i], ovy[i], half_width, lead_p, lead_v);
  }
}

}  // namespace reachcert::kernels::neon

#endif
