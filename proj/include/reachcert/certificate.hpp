#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reachcert/core.hpp"
#include "reachcert/embedding.hpp"
#include "reachcert/policy.hpp"
#include "reachcert/reach_measure.hpp"
#include "reachcert/scenario.hpp"
#include "reachcert/spatial_index.hpp"
#include "reachcert/systems.hpp"

namespace reachcert {

/// Lipschitz-deflated margins r(xbar_t) - L_r delta_t and c(xbar_t) - L_c delta_t.
struct CertifiedMargins {
  std::vector<double> reward;
  std::vector<double> constraint;
};

CertifiedMargins certified_margins(const RewardConstraintSpec& spec, const Trajectory& nominal,
                                   const SensitivityProfile& profile);

/// Certified lower bound on the value at xbar0: max_t min{gamma^t r_t, min_tau gamma^tau c_tau}
/// over the deflated margins of the closed-loop nominal rollout.
double certify_point(const RewardConstraintSpec& spec, const System& system, const PolicyHandle& policy,
                     const SensitivityProfile& profile, const StateVector& xbar0, std::size_t T);

enum class CoveringKind { grid, halton };

struct CoveringConfig {
  CoveringKind kind = CoveringKind::grid;
  Box domain;               // reduced coordinates
  double spacing = 0.1;     // grid pitch; Halton: nominal spacing, derived from the count when <= 0
  std::size_t count = 0;    // Halton point count
  std::size_t budget = 2'000'000;

  /// Grid extents per axis, or the Halton count; throws BudgetExceeded over budget.
  std::size_t planned_size() const;
  double effective_spacing() const;
};

/// Covering nominals in reduced coordinates, point-major.
std::vector<double> covering_points(const CoveringConfig& cfg);

struct CertificateRecord {
  std::vector<double> point;  // reduced coordinates
  double value = 0.0;
  bool boundary = false;

  bool certified() const { return value >= 0.0; }
};

struct BoundaryHit {
  std::size_t record = 0;
  StateVector point;  // reduced coordinates
  double distance = 0.0;
};

/// Ball cover of certified nominals. Membership in the full state space is
/// |x - lift(xbar)|_2 <= eps_x for some certified nominal xbar.
class GlobalCertificate {
 public:
  std::string system;
  std::string policy_id;
  double gamma = 0.0;
  std::size_t horizon = 0;
  double eps_x = 0.0;
  std::uint64_t profile_hash = 0;
  CoveringKind kind = CoveringKind::grid;
  double spacing = 0.0;
  Box domain;
  Embedding embedding;
  std::vector<CertificateRecord> records;

  /// Rebuilds the spatial indices from `records`.
  void finalize();

  std::size_t certified_count() const { return certified_ids_.size(); }
  std::size_t boundary_count() const { return boundary_ids_.size(); }
  const std::vector<std::size_t>& certified_ids() const { return certified_ids_; }
  const std::vector<std::size_t>& boundary_ids() const { return boundary_ids_; }

  bool is_member(std::span<const double> x) const;
  /// Distance from x to the nearest certified ball (0 inside one); +inf when none exist.
  double distance_to_certified(std::span<const double> x) const;
  /// Closest boundary nominal to reduce(x); ties go to the lowest record index.
  BoundaryHit nearest_boundary(std::span<const double> x) const;

 private:
  KdTree certified_tree_;
  KdTree boundary_tree_;
  std::vector<std::size_t> certified_ids_;
  std::vector<std::size_t> boundary_ids_;
};

struct CertificationProblem {
  const System* system = nullptr;
  const RewardConstraintSpec* spec = nullptr;
  const PolicyHandle* policy = nullptr;
  const SensitivityProfile* profile = nullptr;
  std::size_t horizon = 0;
  double eps_x = 0.0;
};

/// Evaluates certify_point on every covering nominal, flags boundary points and
/// builds the indices. Requires spacing <= 2 eps_x.
GlobalCertificate build_certificate(const CoveringConfig& covering, const Embedding& embedding,
                                    const CertificationProblem& problem);

/// Recomputes boundary flags from the stored values.
void assign_boundary_flags(GlobalCertificate& cert);

bool is_member(const GlobalCertificate& cert, const StateVector& x);
/// Throws ContractViolation when the certificate has no boundary points.
StateVector nearest_boundary(const GlobalCertificate& cert, const StateVector& x);

void write_certificate(std::ostream& out, const GlobalCertificate& cert);
GlobalCertificate read_certificate(std::istream& in);
/// One row per record: coordinates, value, certified, boundary.
void write_certificate_csv(std::ostream& out, const GlobalCertificate& cert);

}  // namespace reachcert
