#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "reachcert/certificate.hpp"
#include "reachcert/core.hpp"
#include "reachcert/local_refiner.hpp"
#include "reachcert/policy.hpp"
#include "reachcert/reach_measure.hpp"
#include "reachcert/systems.hpp"

namespace reachcert {

// ---------------------------------------------------------------- policies

/// Analytic overtaking policy standing in for a learned reach-avoid policy.
/// While behind the opponent the ego tracks a waypoint offset to the side and
/// ahead of it; once ahead it tracks the gate centerline. A repulsive term
/// pushes along the downwash-margin gradient when that margin is small.
struct SurrogateConfig {
  double lead_speed = 1.0;     // desired forward speed over the opponent's (m/s)
  double side_offset = 0.6;    // largest lateral waypoint offset while behind (m)
  double clearance = 0.08;     // downwash margin the lateral offset aims to keep (m^2)
  double lookahead = 0.8;      // window for predicting the longitudinal gap (s)
  double ahead_threshold = 0.5;  // counts as ahead once p_y^e - p_y^o exceeds this (m)
  double merge_accel = 0.3;    // lateral acceleration budgeted for merging before the gate (m/s^2)
  double kp = 2.0;             // position gain (1/s^2)
  double kd = 2.5;             // velocity gain (1/s)
  double kv = 3.0;             // forward speed gain (1/s)
  double max_speed = 4.0;      // forward speed cap (m/s)
  double repulse_gain = 3.0;
  double activation = 0.25;    // downwash margin below which repulsion acts
  double bound = 1.0;
};

PolicyHandle make_racing_surrogate(const SurrogateConfig& cfg, const RacingSpec& spec, std::string id = "surrogate");

/// u = grid-quantized clamp(-kp (p - goal) - kd v) for a 1-axis double integrator.
PolicyHandle make_quantized_pd(double goal, double kp, double kd, std::vector<double> levels,
                               std::string id = "quantized-pd");

// ---------------------------------------------------------------- MPPI

class RolloutCost {
 public:
  virtual ~RolloutCost() = default;
  /// Called once per MPPI step before any rollout.
  virtual void begin(std::size_t samples) { (void)samples; }
  /// Adds the cost of step t (states after applying u) to cost[k].
  virtual void running(std::size_t t, const StateBatch& x, const StateBatch& u, double* cost) = 0;
};

enum class WarmStart { none, policy, previous };

const char* warm_start_name(WarmStart w);
bool parse_warm_start(const std::string& text, WarmStart& out);

struct MPPIConfig {
  std::string cost = "fast-goal";
  WarmStart warm_start = WarmStart::previous;
  std::size_t horizon = 20;
  std::size_t samples = 256;
  double lambda = 1.0;
  std::vector<double> sigma{0.3};  // per-axis; a single entry applies to every axis

  void validate(std::size_t control_dim) const;
};

using ControlSequence = std::vector<ControlVector>;

struct MPPIResult {
  ControlVector control;
  ControlSequence sequence;    // weighted average, receding-horizon warm start
  std::vector<double> costs;   // per sample; sample 0 is the noise-free mean
  std::vector<double> weights;
};

/// w_k = exp(-(S_k - min S)/lambda) / sum; argmin (lowest index on ties) when
/// lambda < 1e-9. Non-finite costs get zero weight; all non-finite throws.
std::vector<double> softmax_weights(std::span<const double> costs, double lambda);

/// One MPPI step from x. The K sampled sequences perturb the warm start (zeros
/// when empty) with Gaussian noise; controls are clamped before rollout.
MPPIResult mppi_step(const MPPIConfig& cfg, RolloutCost& cost, const System& system, const StateVector& x,
                     const ControlSequence& warm, std::uint64_t step_seed);

/// Drops the first control and repeats the last.
ControlSequence shift_sequence(const ControlSequence& seq);

/// H-step closed-loop unroll of the policy from x; returns its clamped controls.
ControlSequence policy_unroll(const System& system, const PolicyHandle& policy, const StateVector& x, std::size_t H);

/// Total cost of one control sequence under `cost` (batch of one).
double sequence_cost(RolloutCost& cost, const System& system, const StateVector& x, const ControlSequence& seq);

// ---------------------------------------------------------------- racing costs

/// Shared weights of the racing cost family.
struct RacingCostConfig {
  std::array<double, 3> goal{0.0, 0.5, 0.0};  // point beyond the gate center
  double w_goal = 1.0;
  double desired_speed = 2.0;
  double w_speed = 0.5;
  double w_lateral_speed = 0.05;
  double w_control = 0.01;
  double soft_penalty = 50.0;        // soft-constraint weight
  double target_penalty = 20.0;      // target-maintenance weight
  double barrier_weight = 200.0;     // barrier on the constraint margin
  double barrier_margin = 0.05;
  double violation_penalty = 1000.0;  // per violating step
  double recovery_weight = 10.0;
  double recovery_goal_weight = 0.1;  // tie-breaker once inside a certified region
};

enum class RacingCostKind { plain_goal, fast_goal, soft_constraint, recovery };

const char* cost_kind_name(RacingCostKind k);
bool parse_cost_kind(const std::string& text, RacingCostKind& out);

/// Episode-semantics constraint margin: downwash, plus gate walls while p_y^e < 0.
double racing_episode_margin(const RacingSpec& spec, std::span<const double> x);

class RacingCost final : public RolloutCost {
 public:
  RacingCost(RacingCostKind kind, RacingSpec spec, RacingCostConfig cfg);

  /// Recovery only: certified regions the cost pulls toward. With none, the
  /// recovery cost reduces to its goal and barrier terms.
  void set_certificates(const GlobalCertificate* global, const std::vector<LocalCertificate>* locals);

  void begin(std::size_t samples) override;
  void running(std::size_t t, const StateBatch& x, const StateBatch& u, double* cost) override;

  /// Recovery only: whether rollout k entered a certified region during the last step.
  bool reentered(std::size_t k) const { return k < reentered_.size() && reentered_[k] != 0; }
  bool any_reentered() const;
  RacingCostKind kind() const { return kind_; }

 private:
  RacingCostKind kind_;
  RacingSpec spec_;
  RacingCostConfig cfg_;
  const GlobalCertificate* global_ = nullptr;
  const std::vector<LocalCertificate>* locals_ = nullptr;
  bool has_region_ = false;
  std::vector<char> reentered_;
  std::vector<double> a_, b_, c_;  // scratch rows
};

/// Distance from x to the nearest certified region (global balls or local
/// balls); 0 inside one. Throws when no certificate is available.
double certified_distance(const GlobalCertificate* global, const std::vector<LocalCertificate>& locals,
                          std::span<const double> x);

/// Sum over states of certified_distance plus the constraint barrier.
double recovery_cost(const GlobalCertificate* global, const std::vector<LocalCertificate>& locals,
                     const Trajectory& traj, const RacingSpec& spec, const RacingCostConfig& cfg);

// ---------------------------------------------------------------- CBF

/// a . u >= b
struct LinearConstraint {
  std::array<double, 3> a{};
  double b = 0.0;
};

struct CbfConfig {
  double alpha = 1.0;  // 1/s
  double dt = 0.1;
  bool gate_walls = true;
};

/// Linearized discrete high-order barrier conditions on the ego control for
/// the downwash margin (and the gate walls while p_y^e < 0). Entry 0 is the
/// downwash row.
std::vector<LinearConstraint> cbf_constraints(const CbfConfig& cfg, const RacingSpec& spec,
                                              const OpponentPolicyConfig& opponent, const StateVector& x,
                                              const ControlVector& u_nom);

struct BoxQpResult {
  std::array<double, 3> u{};
  bool feasible = false;
};

/// min |u - u_nom|^2 s.t. rows, -bound <= u_i <= bound, by active-set enumeration.
BoxQpResult solve_box_qp(const std::array<double, 3>& u_nom, std::span<const LinearConstraint> rows, double bound,
                         double tol = 1e-10);

/// Minimal-deviation safe control. Infeasible problems fall back to the box
/// vertex maximizing the linearized downwash barrier.
ControlVector cbf_filter(const CbfConfig& cfg, const RacingSpec& spec, const OpponentPolicyConfig& opponent,
                         const StateVector& x, const ControlVector& u_nom, double bound, bool* feasible = nullptr);

}  // namespace reachcert
