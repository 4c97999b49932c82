#pragma once

// Data-parallel inner loops shared by batched rollouts, MPPI, spatial queries
// and scenario reductions. Each backend implements the same arithmetic in the
// same operation order, so every backend returns bit-identical results to the
// scalar reference (the build disables FP contraction).

#include <cstddef>
#include <string_view>
#include <vector>

namespace reachcert::kernels {

enum class Backend { scalar, avx2, neon };

struct Table {
  Backend backend;
  const char* name;

  // pos <- pos + vel*dt, then vel <- vel + acc*dt.
  void (*integrate_axis)(double* pos, double* vel, const double* acc, std::size_t n, double dt);
  // v <- min(max(v, lo), hi)
  void (*clamp)(double* v, std::size_t n, double lo, double hi);
  // out <- clamp(-(kp*(pos - goal)) - kd*vel, lo, hi)
  void (*axis_feedback)(const double* pos, const double* vel, double goal, double kp, double kd, double lo,
                        double hi, std::size_t n, double* out);
  // Points stored as `dim` rows of length `stride`; out[i] = sum_d (p_d[i] - q_d)^2.
  void (*squared_distances)(const double* points, std::size_t stride, std::size_t count, std::size_t dim,
                            const double* query, double* out);
  // out[i] = || a[:, i] - b[:, i] ||_2 for two row-major batches with a shared stride.
  void (*pair_distances)(const double* a, const double* b, std::size_t stride, std::size_t count,
                         std::size_t dim, double* out);
  double (*max_value)(const double* v, std::size_t n);
  // acc <- min(acc, v)
  void (*min_inplace)(double* acc, const double* v, std::size_t n);
  // out[j] = sum_k w[k] * rows[k*len + j], k ascending.
  void (*weighted_row_sum)(const double* weights, const double* rows, std::size_t k, std::size_t len,
                           double* out);
  // out = (ex-ox)^2 + (ey-oy)^2 - (1 + max(oz-ez, 0)) * scale
  void (*downwash_margin)(const double* ex, const double* ey, const double* ez, const double* ox,
                          const double* oy, const double* oz, std::size_t n, double scale, double* out);
  // out = min(min(px-py+w, -px-py+w), min(pz-py+w, -pz-py+w))
  void (*gate_wall_margin)(const double* px, const double* py, const double* pz, std::size_t n, double wall,
                           double* out);
  // out = min(min((epy-opy)-lead_p, (evy-ovy)-lead_v), min(half-|epx|, half-|epz|))
  void (*lead_corridor_margin)(const double* epx, const double* epy, const double* evy, const double* epz,
                               const double* opy, const double* ovy, std::size_t n, double half_width,
                               double lead_p, double lead_v, double* out);
};

const char* backend_name(Backend b);
bool parse_backend(std::string_view text, Backend& out);

bool is_available(Backend b);
std::vector<Backend> available_backends();
/// Throws ContractViolation when the backend is not compiled in or the CPU lacks it.
const Table& table(Backend b);

/// Best available backend, honoring REACHCERT_KERNELS=scalar|avx2|neon.
Backend default_backend();
const Table& active();
Backend active_backend();
/// Process-wide selection; intended for startup configuration and tests.
void select(Backend b);

/// Restores the previous backend on scope exit.
class ScopedBackend {
 public:
  explicit ScopedBackend(Backend b) : previous_(active_backend()) { select(b); }
  ~ScopedBackend() { select(previous_); }
  ScopedBackend(const ScopedBackend&) = delete;
  ScopedBackend& operator=(const ScopedBackend&) = delete;

 private:
  Backend previous_;
};

}  // namespace reachcert::kernels
