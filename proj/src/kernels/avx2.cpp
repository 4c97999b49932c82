#include <immintrin.h>

#include <cmath>

#include "backends.hpp"

namespace reachcert::kernels::avx2 {

namespace {

inline __m256d neg(__m256d a) { return _mm256_xor_pd(a, _mm256_set1_pd(-0.0)); }
inline __m256d vabs(__m256d a) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), a); }
inline __m256d vclamp(__m256d v, __m256d lo, __m256d hi) { return _mm256_min_pd(_mm256_max_pd(v, lo), hi); }

}  // namespace

void integrate_axis(double* pos, double* vel, const double* acc, size_t n, double dt) {
  const __m256d h = _mm256_set1_pd(dt);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d p = _mm256_loadu_pd(pos + i);
    const __m256d v = _mm256_loadu_pd(vel + i);
    const __m256d a = _mm256_loadu_pd(acc + i);
    _mm256_storeu_pd(pos + i, _mm256_add_pd(p, _mm256_mul_pd(v, h)));
    _mm256_storeu_pd(vel + i, _mm256_add_pd(v, _mm256_mul_pd(a, h)));
  }
  for (; i < n; ++i) {
    pos[i] = pos[i] + vel[i] * dt;
    vel[i] = vel[i] + acc[i] * dt;
  }
}

void clamp(double* v, size_t n, double lo, double hi) {
  const __m256d l = _mm256_set1_pd(lo);
  const __m256d u = _mm256_set1_pd(hi);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(v + i, vclamp(_mm256_loadu_pd(v + i), l, u));
  for (; i < n; ++i) v[i] = elem::clamp(v[i], lo, hi);
}

void axis_feedback(const double* pos, const double* vel, double goal, double kp, double kd, double lo, double hi,
                   size_t n, double* out) {
  const __m256d g = _mm256_set1_pd(goal);
  const __m256d p_gain = _mm256_set1_pd(kp);
  const __m256d d_gain = _mm256_set1_pd(kd);
  const __m256d l = _mm256_set1_pd(lo);
  const __m256d u = _mm256_set1_pd(hi);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d e = _mm256_sub_pd(_mm256_loadu_pd(pos + i), g);
    const __m256d raw = _mm256_sub_pd(neg(_mm256_mul_pd(p_gain, e)), _mm256_mul_pd(d_gain, _mm256_loadu_pd(vel + i)));
    _mm256_storeu_pd(out + i, vclamp(raw, l, u));
  }
  for (; i < n; ++i) out[i] = elem::feedback(pos[i], vel[i], goal, kp, kd, lo, hi);
}

void squared_distances(const double* points, size_t stride, size_t count, size_t dim, const double* query,
                       double* out) {
  size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (size_t d = 0; d < dim; ++d) {
      const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(points + d * stride + i), _mm256_set1_pd(query[d]));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(diff, diff));
    }
    _mm256_storeu_pd(out + i, acc);
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
  for (; i + 4 <= count; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (size_t d = 0; d < dim; ++d) {
      const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(a + d * stride + i), _mm256_loadu_pd(b + d * stride + i));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(diff, diff));
    }
    _mm256_storeu_pd(out + i, _mm256_sqrt_pd(acc));
  }
  for (; i < count; ++i) {
    double acc = 0.0;
    for (size_t d = 0; d < dim; ++d) {
      const double diff = a[d * stride + i] - b[d * stride + i];
      acc = acc + diff * diff;
    }
    out[i] = std::sqrt(acc);
  }
}

double max_value(const double* v, size_t n) {
  if (n < 4) {
    double m = v[0];
    for (size_t i = 1; i < n; ++i) m = elem::max2(v[i], m);
    return m;
  }
  __m256d m4 = _mm256_loadu_pd(v);
  size_t i = 4;
  for (; i + 4 <= n; i += 4) m4 = _mm256_max_pd(_mm256_loadu_pd(v + i), m4);
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, m4);
  double m = elem::max2(lanes[1], lanes[0]);
  m = elem::max2(lanes[2], m);
  m = elem::max2(lanes[3], m);
  for (; i < n; ++i) m = elem::max2(v[i], m);
  return m;
}

void min_inplace(double* acc, const double* v, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(acc + i, _mm256_min_pd(_mm256_loadu_pd(acc + i), _mm256_loadu_pd(v + i)));
  }
  for (; i < n; ++i) acc[i] = elem::min2(acc[i], v[i]);
}

void weighted_row_sum(const double* weights, const double* rows, size_t k, size_t len, double* out) {
  size_t j = 0;
  for (; j + 4 <= len; j += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (size_t r = 0; r < k; ++r) {
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(weights[r]), _mm256_loadu_pd(rows + r * len + j)));
    }
    _mm256_storeu_pd(out + j, acc);
  }
  for (; j < len; ++j) {
    double acc = 0.0;
    for (size_t r = 0; r < k; ++r) acc = acc + weights[r] * rows[r * len + j];
    out[j] = acc;
  }
}

void downwash_margin(const double* ex, const double* ey, const double* ez, const double* ox, const double* oy,
                     const double* oz, size_t n, double scale, double* out) {
  const __m256d s = _mm256_set1_pd(scale);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(ex + i), _mm256_loadu_pd(ox + i));
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ey + i), _mm256_loadu_pd(oy + i));
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(oz + i), _mm256_loadu_pd(ez + i));
    const __m256d lhs = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    const __m256d rhs = _mm256_mul_pd(_mm256_add_pd(one, _mm256_max_pd(dz, zero)), s);
    _mm256_storeu_pd(out + i, _mm256_sub_pd(lhs, rhs));
  }
  for (; i < n; ++i) out[i] = elem::downwash(ex[i], ey[i], ez[i], ox[i], oy[i], oz[i], scale);
}

void gate_wall_margin(const double* px, const double* py, const double* pz, size_t n, double wall, double* out) {
  const __m256d w = _mm256_set1_pd(wall);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(px + i);
    const __m256d y = _mm256_loadu_pd(py + i);
    const __m256d z = _mm256_loadu_pd(pz + i);
    const __m256d a = _mm256_min_pd(_mm256_add_pd(_mm256_sub_pd(x, y), w), _mm256_add_pd(_mm256_sub_pd(neg(x), y), w));
    const __m256d b = _mm256_min_pd(_mm256_add_pd(_mm256_sub_pd(z, y), w), _mm256_add_pd(_mm256_sub_pd(neg(z), y), w));
    _mm256_storeu_pd(out + i, _mm256_min_pd(a, b));
  }
  for (; i < n; ++i) out[i] = elem::gate_wall(px[i], py[i], pz[i], wall);
}

void lead_corridor_margin(const double* epx, const double* epy, const double* evy, const double* epz,
                          const double* opy, const double* ovy, size_t n, double half_width, double lead_p,
                          double lead_v, double* out) {
  const __m256d hw = _mm256_set1_pd(half_width);
  const __m256d lp = _mm256_set1_pd(lead_p);
  const __m256d lv = _mm256_set1_pd(lead_v);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d lead = _mm256_sub_pd(_mm256_sub_pd(_mm256_loadu_pd(epy + i), _mm256_loadu_pd(opy + i)), lp);
    const __m256d speed = _mm256_sub_pd(_mm256_sub_pd(_mm256_loadu_pd(evy + i), _mm256_loadu_pd(ovy + i)), lv);
    const __m256d cx = _mm256_sub_pd(hw, vabs(_mm256_loadu_pd(epx + i)));
    const __m256d cz = _mm256_sub_pd(hw, vabs(_mm256_loadu_pd(epz + i)));
    _mm256_storeu_pd(out + i, _mm256_min_pd(_mm256_min_pd(lead, speed), _mm256_min_pd(cx, cz)));
  }
  for (; i < n; ++i) {
    out[i] = elem::lead_corridor(epx[i], epy[i], evy[i], epz[i], opy[i], ovy[i], half_width, lead_p, lead_v);
  }
}

}  // namespace reachcert::kernels::avx2
