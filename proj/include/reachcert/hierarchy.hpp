#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "reachcert/certificate.hpp"
#include "reachcert/controllers.hpp"
#include "reachcert/local_refiner.hpp"
#include "reachcert/policy.hpp"
#include "reachcert/reach_measure.hpp"
#include "reachcert/systems.hpp"

namespace reachcert {

/// Tier that produced a control. `none` marks controllers without switching.
enum class Tier : int { none = -1, target = 0, global = 1, local = 2, recovery = 3 };

const char* tier_name(Tier t);

struct TierDiagnostics {
  double reward = 0.0;                 // r(x_t); tier 0 fires when > 0
  bool in_global = false;
  double global_distance = 0.0;        // distance to the nearest certified global ball
  bool cache_hit = false;
  bool refine_attempted = false;
  std::optional<RefineStatus> refine_status;
  std::size_t refine_iterations = 0;
  double local_distance = 0.0;         // to the tier-2 ball, or the closest cached ball otherwise
  std::size_t cached_locals = 0;
  bool recovery_reentry = false;       // tier 3: some rollout entered a certified region
};

struct TierDecision {
  Tier tier = Tier::none;
  ControlVector control;
  std::optional<LocalCertificate> local;  // set on tier 2
  TierDiagnostics diag;
};

/// Anything that maps the current state to a control, once per step.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string name() const = 0;
  virtual void reset(std::uint64_t seed) = 0;
  virtual TierDecision act(const StateVector& x, std::size_t step) = 0;
};

struct HierarchyConfig {
  MPPIConfig fast;      // tier 0, fast-goal cost
  MPPIConfig recovery;  // tier 3, recovery cost
  MPPIConfig ablation;  // tiers 1-2 in the ablation, plain-goal cost
  RacingCostConfig cost;
  RefineConfig refine;
  bool refine_enabled = true;
  std::size_t max_cached = 32;
  // Tiers 1-2 act with MPPI instead of the certified policy, and tier 3 is
  // warm-started from its previous solution rather than the policy.
  bool ablation_mppi = false;
  std::uint64_t seed = 0;
};

/// Four-tier priority switch: target maintenance, global certificate, local
/// refinement, recovery.
class HierarchicalController final : public Controller {
 public:
  HierarchicalController(const RacingSystem& system, RacingSpec spec, RewardConstraintSpec rc,
                         const PolicyHandle& policy, const GlobalCertificate& cert, HierarchyConfig cfg);
  HierarchicalController(const HierarchicalController&) = delete;
  HierarchicalController& operator=(const HierarchicalController&) = delete;

  std::string name() const override { return cfg_.ablation_mppi ? "hybrid-ablation-mppi" : "hybrid"; }
  void reset(std::uint64_t seed) override;
  TierDecision act(const StateVector& x, std::size_t step) override;

  const std::vector<LocalCertificate>& cache() const { return cache_; }
  const PolicyHandle& policy() const { return policy_; }
  const GlobalCertificate& certificate() const { return cert_; }

 private:
  ControlVector run_mppi(const MPPIConfig& mc, RacingCost& cost, const StateVector& x, int slot,
                         bool policy_warm, std::uint64_t seed);
  void evict_drifted(const StateVector& x);

  const RacingSystem& system_;
  RacingSpec spec_;
  RewardConstraintSpec rc_;
  const PolicyHandle& policy_;
  const GlobalCertificate& cert_;
  HierarchyConfig cfg_;
  RacingCost fast_cost_;
  RacingCost recovery_cost_;
  RacingCost plain_cost_;
  std::vector<LocalCertificate> cache_;
  struct Attempt {
    std::size_t record;
    Embedding embedding;
  };
  std::vector<Attempt> failed_;
  ControlSequence previous_;
  int previous_slot_ = -1;
  std::uint64_t seed_ = 0;
};

enum class Outcome { success, collision, timeout, lost };

const char* outcome_name(Outcome o);

struct StepRecord {
  std::size_t t = 0;
  StateVector state;
  TierDecision decision;
  double reward = 0.0;
  double downwash = 0.0;
  double wall = 0.0;
};

struct EpisodeLog {
  std::vector<StepRecord> steps;  // one per control step
  StateVector final_state;
  Outcome outcome = Outcome::timeout;
  std::optional<std::size_t> ego_cross;  // step whose transition crossed the gate plane
  std::optional<std::size_t> opponent_cross;
  std::array<std::size_t, 4> tier_histogram{};
};

/// Closed loop until success, collision, the opponent winning the gate, or
/// `steps` decisions. Collision: downwash margin <= 0, or gate-wall margin <= 0
/// while p_y^e < 0. Success: the ego's transition across p_y = 0 happens
/// inside the corridor, strictly before the opponent's, and lands safely.
EpisodeLog run_episode(Controller& controller, const RacingSystem& system, const RacingSpec& spec,
                       const StateVector& x0, std::size_t steps);

/// Per-step CSV: t, state, tier, margins, control.
void write_episode_csv(std::ostream& out, const EpisodeLog& log);
/// outcome=<o> steps=<n> tiers=<h0>,<h1>,<h2>,<h3>
std::string episode_summary(const EpisodeLog& log);

}  // namespace reachcert
