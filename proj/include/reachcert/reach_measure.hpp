#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "reachcert/core.hpp"

namespace reachcert {

using ScalarField = std::function<double(std::span<const double>)>;

/// Reward r (> 0 on the target), constraint c (> 0 where safe), their
/// Euclidean Lipschitz constants and the discount.
struct RewardConstraintSpec {
  ScalarField reward;
  ScalarField constraint;
  double lipschitz_reward = 0.0;
  double lipschitz_constraint = 0.0;
  double gamma = 0.99;

  void validate() const;
};

/// max_t min{gamma^t r_t, min_{tau<=t} gamma^tau c_tau} over aligned margin sequences.
double discounted_reach_avoid(std::span<const double> r, std::span<const double> c, double gamma);

/// g(xi, t) = min{gamma^t r(x_t), min_{tau<=t} gamma^tau c(x_tau)}.
double ra_measure(const RewardConstraintSpec& spec, const Trajectory& traj, std::size_t t);
/// max over t = 0..T of ra_measure.
double rollout_value(const RewardConstraintSpec& spec, const Trajectory& traj);

/// Target-set and constraint geometry of the racing benchmark.
struct RacingSpec {
  double corridor_half_width = 0.3;
  double wall_margin = 0.05;
  double downwash_scale = 0.2;
  double lead_position = 0.0;
  double lead_velocity = 0.0;
  // c is reported as min(margins, constraint_cap). With cap >= sup r the
  // reach-avoid value is unchanged and L_c stays bounded.
  double constraint_cap = 0.3;
  // Gate dimensions are carried for reporting only; the corridor stands in.
  double gate_width = 0.6;
  double gate_height = 0.6;
  Box operating_box;  // 12-D box the Lipschitz constants are valid on

  void validate() const;
};

double racing_reward(const RacingSpec& spec, std::span<const double> x);
double racing_downwash_margin(const RacingSpec& spec, std::span<const double> x);
double racing_gate_wall_margin(const RacingSpec& spec, std::span<const double> x);
double racing_constraint(const RacingSpec& spec, std::span<const double> x);

/// Analytic constants from the margin gradients over spec.operating_box.
double racing_reward_lipschitz(const RacingSpec& spec);
double racing_constraint_lipschitz(const RacingSpec& spec);

RewardConstraintSpec racing_reward_constraint(const RacingSpec& spec, double gamma);

/// Largest |f(x) - f(y)| / |x - y| over sampled pairs: half uniform pairs on
/// the box, half short-baseline pairs that probe local slopes. A lower bound
/// on the true constant.
double lipschitz_estimate(const ScalarField& fn, const Box& domain, std::size_t samples, std::uint64_t seed);

}  // namespace reachcert
