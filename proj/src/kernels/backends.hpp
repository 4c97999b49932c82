#pragma once

// Backend entry points. Kept free of C++ standard library headers so the NEON
// translation unit can be syntax-checked on hosts without an aarch64 sysroot.

#include <stddef.h>

#define REACHCERT_DECLARE_KERNELS(ns)                                                                     \
  namespace reachcert::kernels::ns {                                                                      \
  void integrate_axis(double* pos, double* vel, const double* acc, size_t n, double dt);                  \
  void clamp(double* v, size_t n, double lo, double hi);                                                  \
  void axis_feedback(const double* pos, const double* vel, double goal, double kp, double kd, double lo,  \
                     double hi, size_t n, double* out);                                                   \
  void squared_distances(const double* points, size_t stride, size_t count, size_t dim,                   \
                         const double* query, double* out);                                               \
  void pair_distances(const double* a, const double* b, size_t stride, size_t count, size_t dim,          \
                      double* out);                                                                       \
  double max_value(const double* v, size_t n);                                                            \
  void min_inplace(double* acc, const double* v, size_t n);                                               \
  void weighted_row_sum(const double* weights, const double* rows, size_t k, size_t len, double* out);    \
  void downwash_margin(const double* ex, const double* ey, const double* ez, const double* ox,            \
                       const double* oy, const double* oz, size_t n, double scale, double* out);          \
  void gate_wall_margin(const double* px, const double* py, const double* pz, size_t n, double wall,      \
                        double* out);                                                                     \
  void lead_corridor_margin(const double* epx, const double* epy, const double* evy, const double* epz,   \
                            const double* opy, const double* ovy, size_t n, double half_width,            \
                            double lead_p, double lead_v, double* out);                                   \
  }

REACHCERT_DECLARE_KERNELS(scalar)
REACHCERT_DECLARE_KERNELS(avx2)
REACHCERT_DECLARE_KERNELS(neon)

// Scalar element formulas shared by every backend's remainder loop.
namespace reachcert::kernels::elem {

// x86 MINPD/MAXPD semantics: the second operand wins on ties and unordered input.
inline double min2(double a, double b) { return a < b ? a : b; }
inline double max2(double a, double b) { return a > b ? a : b; }
inline double abs1(double a) { return __builtin_fabs(a); }

inline double clamp(double v, double lo, double hi) { return min2(max2(v, lo), hi); }

inline double feedback(double p, double v, double goal, double kp, double kd, double lo, double hi) {
  return clamp(-(kp * (p - goal)) - kd * v, lo, hi);
}

inline double downwash(double ex, double ey, double ez, double ox, double oy, double oz, double scale) {
  const double dx = ex - ox;
  const double dy = ey - oy;
  return (dx * dx + dy * dy) - (1.0 + max2(oz - ez, 0.0)) * scale;
}

inline double gate_wall(double px, double py, double pz, double wall) {
  const double a = min2((px - py) + wall, (-px - py) + wall);
  const double b = min2((pz - py) + wall, (-pz - py) + wall);
  return min2(a, b);
}

inline double lead_corridor(double epx, double epy, double evy, double epz, double opy, double ovy,
                            double half_width, double lead_p, double lead_v) {
  const double a = min2((epy - opy) - lead_p, (evy - ovy) - lead_v);
  const double b = min2(half_width - abs1(epx), half_width - abs1(epz));
  return min2(a, b);
}

}  // namespace reachcert::kernels::elem
