#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "reachcert/core.hpp"
#include "reachcert/policy.hpp"

namespace reachcert {

struct SystemSpec {
  std::string name;
  std::size_t state_dim = 0;
  std::size_t control_dim = 0;
  double control_bound = 1.0;  // per-axis, |u_i| <= control_bound
  double dt = 0.1;
  std::vector<Unit> state_units;

  void validate() const;
};

/// Discrete-time dynamics x+ = f(x, u).
class System {
 public:
  explicit System(SystemSpec spec);
  virtual ~System() = default;

  const SystemSpec& spec() const { return spec_; }
  std::size_t state_dim() const { return spec_.state_dim; }
  std::size_t control_dim() const { return spec_.control_dim; }

  /// Advances `count` states in place. Both arrays use the StateBatch layout:
  /// coordinate i of sample k lives at x[i*count + k]. A single state is the
  /// special case count == 1, where the layout is the plain vector.
  virtual void advance(double* x, const double* u, std::size_t count) const = 0;

  StateVector step(const StateVector& x, const ControlVector& u) const;
  void step_batch(StateBatch& x, const StateBatch& u) const;

  /// Per-axis clamp to the control bound.
  ControlVector clamp(ControlVector u) const;

 private:
  SystemSpec spec_;
};

/// Independent double-integrator axes; state [p_1, v_1, p_2, v_2, ...],
/// control [a_1, a_2, ...], forward Euler.
class DoubleIntegrator final : public System {
 public:
  DoubleIntegrator(std::size_t axes, double dt, double control_bound = 1.0);
  void advance(double* x, const double* u, std::size_t count) const override;
};

/// x+ = A x + B u with row-major A (n x n) and B (n x m).
class LinearSystem final : public System {
 public:
  LinearSystem(std::vector<double> a, std::vector<double> b, std::size_t n, std::size_t m, double dt,
               double control_bound = 1.0);
  void advance(double* x, const double* u, std::size_t count) const override;

 private:
  std::vector<double> a_;
  std::vector<double> b_;
};

/// Per-axis state-feedback gain u = -(kp*(p - goal) + kd*v).
struct LqrGain {
  double kp = 0.0;
  double kd = 0.0;
};

/// Infinite-horizon discrete LQR for the Euler double integrator
/// [p, v]+ = [[1, dt], [0, 1]] [p, v] + [0, dt] u, cost sum p'Qp + r u^2 with
/// Q = diag(q_pos, q_vel). Riccati iteration to a fixed point.
LqrGain solve_axis_lqr(double dt, double q_pos, double q_vel, double r);

struct OpponentPolicyConfig {
  LqrGain gain;
  std::array<double, 3> goal{0.0, 2.0, 0.0};
  double clamp = 1.0;
};

OpponentPolicyConfig make_opponent_config(double dt, double q_pos, double q_vel, double r,
                                          std::array<double, 3> goal, double clamp);

/// u = clamp(-K (x_o - x_goal)) on the 6-D opponent state [px, vx, py, vy, pz, vz].
ControlVector opponent_lqr(const OpponentPolicyConfig& config, const StateVector& x_o);

namespace racing {
// Joint state layout [ego(6), opponent(6)], each block [px, vx, py, vy, pz, vz].
inline constexpr std::size_t kEgo = 0;
inline constexpr std::size_t kOpp = 6;
inline constexpr std::size_t kPx = 0;
inline constexpr std::size_t kVx = 1;
inline constexpr std::size_t kPy = 2;
inline constexpr std::size_t kVy = 3;
inline constexpr std::size_t kPz = 4;
inline constexpr std::size_t kVz = 5;
inline constexpr std::size_t kStateDim = 12;
inline constexpr std::size_t kControlDim = 3;
}  // namespace racing

/// 12-D joint racing system. The 3-D control drives the ego; the opponent's
/// LQR is part of f, so rollouts see it as autonomous dynamics.
class RacingSystem final : public System {
 public:
  RacingSystem(double dt, double control_bound, OpponentPolicyConfig opponent);
  void advance(double* x, const double* u, std::size_t count) const override;

  const OpponentPolicyConfig& opponent() const { return opponent_; }
  /// Removes the opponent's feedback so its block coasts on its velocity.
  void freeze_opponent(bool frozen) { frozen_ = frozen; }

 private:
  OpponentPolicyConfig opponent_;
  bool frozen_ = false;
};

/// Closed loop: u_t = clamp(policy(x_t)). Returns T+1 states.
Trajectory rollout(const System& system, const StateVector& x0, const PolicyHandle& policy, std::size_t T);

/// Replays a fixed control sequence (each control clamped). Returns controls.size()+1 states.
Trajectory rollout_open_loop(const System& system, const StateVector& x0, std::span<const ControlVector> controls);

}  // namespace reachcert
