#pragma once

#include <array>
#include <memory>
#include <vector>

#include "reachcert/certificate.hpp"
#include "reachcert/controllers.hpp"
#include "reachcert/embedding.hpp"
#include "reachcert/hierarchy.hpp"
#include "reachcert/local_refiner.hpp"
#include "reachcert/policy.hpp"
#include "reachcert/reach_measure.hpp"
#include "reachcert/scenario.hpp"
#include "reachcert/systems.hpp"

namespace reachcert {

// ---------------------------------------------------------------- 2-D benchmark

/// One-axis double integrator [p, v]: reach |p - target| < target_halfwidth
/// with |v| < target_speed, never entering the obstacle interval.
struct Benchmark2D {
  double dt = 0.25;
  double control_bound = 1.0;
  std::size_t horizon = 12;
  double gamma = 0.99;
  double target = 1.0;
  double target_halfwidth = 0.4;
  double target_speed = 0.5;
  double obstacle_lo = 1.5;
  double obstacle_hi = 1.9;
  Box domain{{-1.5, -1.5}, {3.0, 1.5}};
  // Quantized PD policy.
  double kp = 1.0;
  double kd = 1.6;
  std::vector<double> levels{-1.0, 0.0, 1.0};

  void validate() const;
};

double benchmark2d_reward(const Benchmark2D& b, std::span<const double> x);
double benchmark2d_constraint(const Benchmark2D& b, std::span<const double> x);
RewardConstraintSpec benchmark2d_spec(const Benchmark2D& b);
std::unique_ptr<DoubleIntegrator> benchmark2d_system(const Benchmark2D& b);
PolicyHandle benchmark2d_policy(const Benchmark2D& b);

// ---------------------------------------------------------------- 2-D linear test system

/// Lightly damped oscillator x+ = A x + B u used to calibrate deviation bounds.
struct Linear2D {
  double dt = 0.1;
  double stiffness = 1.0;
  double damping = 0.2;
  double control_bound = 1.0;
  std::size_t horizon = 30;
  Box domain{{-1.0, -1.0}, {1.0, 1.0}};
};

std::unique_ptr<LinearSystem> linear2d_system(const Linear2D& l);
/// Reach the 0.1-box about the origin while |p| stays below 1.5.
RewardConstraintSpec linear2d_spec(const Linear2D& l);
/// u = -[k1, k2] x, clamped.
PolicyHandle linear2d_policy(const Linear2D& l, double k1 = 0.5, double k2 = 0.5);

// ---------------------------------------------------------------- racing

/// Everything needed to instantiate the racing benchmark.
struct RacingSetup {
  double dt = 0.1;
  double control_bound = 1.0;
  double opponent_q_pos = 1.0;
  double opponent_q_vel = 0.1;
  double opponent_r = 0.01;
  std::array<double, 3> opponent_goal{0.0, 2.0, 0.0};
  double opponent_clamp = 1.0;
  double gamma = 0.99;
  std::size_t horizon = 40;  // certification horizon
  RacingSpec spec;
  SurrogateConfig surrogate;

  // Scenario sensitivity bound.
  ScenarioConfig scenario{0.1, 0.001, 1};
  double eps_x = 0.1;
  Box profile_domain;  // reduced-coordinate box the nominal pairs are drawn from

  // Global covering in reduced coordinates.
  CoveringConfig covering;

  HierarchyConfig hierarchy;
  CbfConfig cbf;
  MPPIConfig baseline_mppi;

  Box initial_box;  // 12-D box of initial conditions
  std::size_t episode_steps = 300;

  RacingSetup();
};

/// z = [ego px, vx, py, vy, opponent px, vx, py, vy]; heights pinned to `context`.
Embedding racing_embedding(std::span<const double> context = {});

OpponentPolicyConfig racing_opponent(const RacingSetup& s);
std::unique_ptr<RacingSystem> racing_system(const RacingSetup& s);
RewardConstraintSpec racing_spec(const RacingSetup& s);
PolicyHandle racing_policy(const RacingSetup& s);

}  // namespace reachcert
