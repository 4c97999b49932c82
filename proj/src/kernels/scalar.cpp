#include <cmath>

#include "backends.hpp"

namespace reachcert::kernels::scalar {

void integrate_axis(double* pos, double* vel, const double* acc, size_t n, double dt) {
  for (size_t i = 0; i < n; ++i) {
    pos[i] = pos[i] + vel[i] * dt;
    vel[i] = vel[i] + acc[i] * dt;
  }
}

void clamp(double* v, size_t n, double lo, double hi) {
  for (size_t i = 0; i < n; ++i) v[i] = elem::clamp(v[i], lo, hi);
}

void axis_feedback(const double* pos, const double* vel, double goal, double kp, double kd, double lo, double hi,
                   size_t n, double* out) {
  for (size_t i = 0; i < n; ++i) out[i] = elem::feedback(pos[i], vel[i], goal, kp, kd, lo, hi);
}

void squared_distances(const double* points, size_t stride, size_t count, size_t dim, const double* query,
                       double* out) {
  for (size_t i = 0; i < count; ++i) out[i] = 0.0;
  for (size_t d = 0; d < dim; ++d) {
    const double* row = points + d * stride;
    const double q = query[d];
    for (size_t i = 0; i < count; ++i) {
      const double diff = row[i] - q;
      out[i] = out[i] + diff * diff;
    }
  }
}

void pair_distances(const double* a, const double* b, size_t stride, size_t count, size_t dim, double* out) {
  for (size_t i = 0; i < count; ++i) out[i] = 0.0;
  for (size_t d = 0; d < dim; ++d) {
    const double* ra = a + d * stride;
    const double* rb = b + d * stride;
    for (size_t i = 0; i < count; ++i) {
      const double diff = ra[i] - rb[i];
      out[i] = out[i] + diff * diff;
    }
  }
  for (size_t i = 0; i < count; ++i) out[i] = std::sqrt(out[i]);
}

double max_value(const double* v, size_t n) {
  double m = v[0];
  for (size_t i = 1; i < n; ++i) m = elem::max2(v[i], m);
  return m;
}

void min_inplace(double* acc, const double* v, size_t n) {
  for (size_t i = 0; i < n; ++i) acc[i] = elem::min2(acc[i], v[i]);
}

void weighted_row_sum(const double* weights, const double* rows, size_t k, size_t len, double* out) {
  for (size_t j = 0; j < len; ++j) out[j] = 0.0;
  for (size_t r = 0; r < k; ++r) {
    const double w = weights[r];
    const double* row = rows + r * len;
    for (size_t j = 0; j < len; ++j) out[j] = out[j] + w * row[j];
  }
}

void downwash_margin(const double* ex, const double* ey, const double* ez, const double* ox, const double* oy,
                     const double* oz, size_t n, double scale, double* out) {
  for (size_t i = 0; i < n; ++i) out[i] = elem::downwash(ex[i], ey[i], ez[i], ox[i], oy[i], oz[i], scale);
}

void gate_wall_margin(const double* px, const double* py, const double* pz, size_t n, double wall, double* out) {
  for (size_t i = 0; i < n; ++i) out[i] = elem::gate_wall(px[i], py[i], pz[i], wall);
}

void lead_corridor_margin(const double* epx, const double* epy, const double* evy, const double* epz,
                          const double* opy, const double* ovy, size_t n, double half_width, double lead_p,
                          double lead_v, double* out) {
  for (size_t i = 0; i < n; ++i) {
    out[i] = elem::lead_corridor(epx[i], epy[i], evy[i], epz[i], opy[i], ovy[i], half_width, lead_p, lead_v);
  }
}

}  // namespace reachcert::kernels::scalar
