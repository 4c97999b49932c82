#include <atomic>
#include <cstdlib>
#include <string>

#include "backends.hpp"
#include "reachcert/core.hpp"
#include "reachcert/kernels.hpp"

namespace reachcert::kernels {

namespace {

#define REACHCERT_TABLE(ns, tag)                                                                              \
  Table {                                                                                                     \
    Backend::tag, #tag, ns::integrate_axis, ns::clamp, ns::axis_feedback, ns::squared_distances,              \
        ns::pair_distances, ns::max_value, ns::min_inplace, ns::weighted_row_sum, ns::downwash_margin,        \
        ns::gate_wall_margin, ns::lead_corridor_margin                                                        \
  }

const Table kScalar = REACHCERT_TABLE(scalar, scalar);
#if defined(REACHCERT_HAVE_AVX2)
const Table kAvx2 = REACHCERT_TABLE(avx2, avx2);
#endif
#if defined(__aarch64__)
const Table kNeon = REACHCERT_TABLE(neon, neon);
#endif

#undef REACHCERT_TABLE

bool cpu_has_avx2() {
#if defined(REACHCERT_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

std::atomic<const Table*>& active_slot() {
  static std::atomic<const Table*> slot{&table(default_backend())};
  return slot;
}

}  // namespace

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "unknown";
}

bool parse_backend(std::string_view text, Backend& out) {
  if (text == "scalar") out = Backend::scalar;
  else if (text == "avx2") out = Backend::avx2;
  else if (text == "neon") out = Backend::neon;
  else return false;
  return true;
}

bool is_available(Backend b) {
  switch (b) {
    case Backend::scalar: return true;
    case Backend::avx2: return cpu_has_avx2();
    case Backend::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::vector<Backend> available_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon}) {
    if (is_available(b)) out.push_back(b);
  }
  return out;
}

const Table& table(Backend b) {
  require(is_available(b), std::string("kernel backend not available: ") + backend_name(b));
  switch (b) {
#if defined(REACHCERT_HAVE_AVX2)
    case Backend::avx2: return kAvx2;
#endif
#if defined(__aarch64__)
    case Backend::neon: return kNeon;
#endif
    default: return kScalar;
  }
}

Backend default_backend() {
  if (const char* env = std::getenv("REACHCERT_KERNELS"); env != nullptr && *env != '\0') {
    Backend b;
    require(parse_backend(env, b), std::string("REACHCERT_KERNELS: unknown backend '") + env + "'");
    require(is_available(b), std::string("REACHCERT_KERNELS: backend not available: ") + env);
    return b;
  }
  if (is_available(Backend::avx2)) return Backend::avx2;
  if (is_available(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

const Table& active() { return *active_slot().load(std::memory_order_acquire); }

Backend active_backend() { return active().backend; }

void select(Backend b) { active_slot().store(&table(b), std::memory_order_release); }

}  // namespace reachcert::kernels
