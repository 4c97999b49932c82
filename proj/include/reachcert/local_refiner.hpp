#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "reachcert/certificate.hpp"
#include "reachcert/embedding.hpp"
#include "reachcert/policy.hpp"
#include "reachcert/reach_measure.hpp"
#include "reachcert/systems.hpp"

namespace reachcert {

struct RefineConfig {
  std::size_t samples = 159;  // per iteration
  double r_max = 1.0;
  std::size_t max_iterations = 20;
  std::size_t horizon = 40;
  std::uint64_t seed = 0;
  double r_min = 1e-3;
  // New radius after a violation: one ulp inside the closest violation, minus this.
  double shrink_margin = 0.0;

  void validate() const;
};

/// Certified closed ball B_radius(center) in the global certificate's reduced
/// coordinates, valid for one policy.
struct LocalCertificate {
  StateVector center;
  double radius = 0.0;
  std::string policy_id;
  std::size_t iterations = 0;
  std::size_t created_step = 0;
  std::uint64_t seed = 0;
  std::size_t boundary_record = 0;
  Embedding embedding;  // dropped coordinates pinned to the state that triggered refinement
};

enum class RefineStatus { success, radius_collapse, iterations_exhausted };

const char* refine_status_name(RefineStatus s);

struct RefineIteration {
  double radius = 0.0;
  std::size_t violations = 0;
  double closest_violation = 0.0;  // meaningful when violations > 0
};

struct RefineResult {
  RefineStatus status = RefineStatus::iterations_exhausted;
  std::optional<LocalCertificate> certificate;
  std::vector<RefineIteration> history;

  bool ok() const { return status == RefineStatus::success; }
};

/// Shrink-and-resample growth of the largest sampled-safe ball about `center`.
/// Samples are uniform on the reduced-coordinate ball, lifted through `embedding`.
RefineResult grow_ball(const RefineConfig& cfg, const System& system, const RewardConstraintSpec& spec,
                       const PolicyHandle& policy, const StateVector& center, const Embedding& embedding);

/// Local refinement at the boundary point of `cert` nearest to x_t. Throws
/// ContractViolation if the certificate has no boundary points or was issued
/// for a different policy.
RefineResult iterative_growth(const RefineConfig& cfg, const System& system, const RewardConstraintSpec& spec,
                              const PolicyHandle& policy, const GlobalCertificate& cert, const StateVector& x_t);

/// |x - lift(center)|_2 <= radius, with the lift pinned to the certificate's context.
bool local_member(const LocalCertificate& lc, const StateVector& x);
/// As above, refusing certificates bound to another policy.
bool local_member(const LocalCertificate& lc, const StateVector& x, const std::string& policy_id);
double local_distance(const LocalCertificate& lc, std::span<const double> x);

/// Per-iteration CSV (iteration, radius, violations, closest_violation).
void write_refine_csv(std::ostream& out, const RefineResult& result);

}  // namespace reachcert
