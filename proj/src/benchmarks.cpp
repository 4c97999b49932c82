#include "reachcert/benchmarks.hpp"

#include <algorithm>
#include <cmath>

namespace reachcert {

using namespace racing;

void Benchmark2D::validate() const {
  require(dt > 0.0 && control_bound > 0.0 && horizon >= 1, "benchmark2d: invalid dynamics parameters");
  require(target_halfwidth > 0.0 && target_speed > 0.0, "benchmark2d: target must have positive size");
  require(obstacle_lo < obstacle_hi, "benchmark2d: empty obstacle");
  require(domain.dim() == 2, "benchmark2d: domain must be 2-D");
  domain.validate_nondegenerate();
}

double benchmark2d_reward(const Benchmark2D& b, std::span<const double> x) {
  return std::min(b.target_halfwidth - std::abs(x[0] - b.target), b.target_speed - std::abs(x[1]));
}

double benchmark2d_constraint(const Benchmark2D& b, std::span<const double> x) {
  return std::max(b.obstacle_lo - x[0], x[0] - b.obstacle_hi);
}

RewardConstraintSpec benchmark2d_spec(const Benchmark2D& b) {
  b.validate();
  RewardConstraintSpec s;
  s.reward = [b](std::span<const double> x) { return benchmark2d_reward(b, x); };
  s.constraint = [b](std::span<const double> x) { return benchmark2d_constraint(b, x); };
  s.lipschitz_reward = 1.0;
  s.lipschitz_constraint = 1.0;
  s.gamma = b.gamma;
  s.validate();
  return s;
}

std::unique_ptr<DoubleIntegrator> benchmark2d_system(const Benchmark2D& b) {
  return std::make_unique<DoubleIntegrator>(1, b.dt, b.control_bound);
}

PolicyHandle benchmark2d_policy(const Benchmark2D& b) {
  return make_quantized_pd(b.target, b.kp, b.kd, b.levels, "benchmark2d-pd");
}

std::unique_ptr<LinearSystem> linear2d_system(const Linear2D& l) {
  std::vector<double> a{1.0, l.dt, -l.stiffness * l.dt, 1.0 - l.damping * l.dt};
  std::vector<double> b{0.0, l.dt};
  return std::make_unique<LinearSystem>(std::move(a), std::move(b), 2, 1, l.dt, l.control_bound);
}

RewardConstraintSpec linear2d_spec(const Linear2D&) {
  RewardConstraintSpec s;
  s.reward = [](std::span<const double> x) { return 0.1 - std::max(std::abs(x[0]), std::abs(x[1])); };
  s.constraint = [](std::span<const double> x) { return 1.5 - std::abs(x[0]); };
  s.lipschitz_reward = 1.0;
  s.lipschitz_constraint = 1.0;
  s.gamma = 0.99;
  s.validate();
  return s;
}

PolicyHandle linear2d_policy(const Linear2D& l, double k1, double k2) {
  PolicyHandle p;
  p.id = "linear2d-feedback";
  const double bound = l.control_bound;
  p.evaluate = [k1, k2, bound](const StateVector& x) {
    return ControlVector{std::clamp(-k1 * x[0] - k2 * x[1], -bound, bound)};
  };
  return p;
}

RacingSetup::RacingSetup() {
  // Operating box for the Lipschitz constants, both drones.
  spec.operating_box.lo.assign(kStateDim, 0.0);
  spec.operating_box.hi.assign(kStateDim, 0.0);
  for (std::size_t base : {kEgo, kOpp}) {
    const double lo[6] = {-2.0, -5.0, -7.0, -5.0, -1.0, -5.0};
    const double hi[6] = {2.0, 5.0, 3.0, 5.0, 1.0, 5.0};
    for (std::size_t i = 0; i < 6; ++i) {
      spec.operating_box.lo[base + i] = lo[i];
      spec.operating_box.hi[base + i] = hi[i];
    }
  }

  // Reduced coordinates [epx, evx, epy, evy, opx, ovx, opy, ovy].
  profile_domain = Box{{-1.0, -1.0, -6.0, 0.5, -0.3, -0.3, -5.0, 0.0}, {1.0, 1.0, 0.0, 4.0, 0.3, 0.3, 0.0, 3.5}};
  // The covering only spans the approach to the gate: at eps_x = 0.1 an 8-D
  // Halton set needs (volume / 0.2^8) points to keep the spacing below 2 eps_x.
  covering.kind = CoveringKind::halton;
  covering.domain = Box{{-0.3, -0.5, -2.5, 1.5, -0.2, -0.2, -3.5, 1.0}, {0.3, 0.5, 0.0, 4.0, 0.2, 0.2, -0.3, 3.0}};
  covering.count = 1'500'000;
  covering.spacing = 0.0;

  hierarchy.fast.cost = "fast-goal";
  hierarchy.fast.warm_start = WarmStart::previous;
  hierarchy.recovery.cost = "recovery";
  hierarchy.recovery.warm_start = WarmStart::policy;
  hierarchy.ablation.cost = "plain-goal";
  hierarchy.ablation.warm_start = WarmStart::previous;
  hierarchy.refine.r_max = 1.0;
  hierarchy.refine.horizon = horizon;
  hierarchy.refine.shrink_margin = 0.0;

  baseline_mppi.cost = "plain-goal";
  baseline_mppi.warm_start = WarmStart::previous;

  // Ego behind and to the right of the opponent with a speed advantage.
  initial_box.lo = {0.45, 0.0, -5.6, 1.4, 0.0, 0.0, -0.1, 0.0, -5.0, 0.3, 0.0, 0.0};
  initial_box.hi = {0.7, 0.0, -5.0, 1.8, 0.0, 0.0, 0.1, 0.0, -4.6, 0.6, 0.0, 0.0};
}

Embedding racing_embedding(std::span<const double> context) {
  std::vector<double> ctx(kStateDim, 0.0);
  if (!context.empty()) {
    require(context.size() == kStateDim, "racing embedding: context must be 12-D");
    ctx.assign(context.begin(), context.end());
  }
  return Embedding(kStateDim, {kEgo + kPx, kEgo + kVx, kEgo + kPy, kEgo + kVy, kOpp + kPx, kOpp + kVx, kOpp + kPy,
                               kOpp + kVy},
                   std::move(ctx));
}

OpponentPolicyConfig racing_opponent(const RacingSetup& s) {
  return make_opponent_config(s.dt, s.opponent_q_pos, s.opponent_q_vel, s.opponent_r, s.opponent_goal,
                              s.opponent_clamp);
}

std::unique_ptr<RacingSystem> racing_system(const RacingSetup& s) {
  return std::make_unique<RacingSystem>(s.dt, s.control_bound, racing_opponent(s));
}

RewardConstraintSpec racing_spec(const RacingSetup& s) { return racing_reward_constraint(s.spec, s.gamma); }

PolicyHandle racing_policy(const RacingSetup& s) { return make_racing_surrogate(s.surrogate, s.spec); }

}  // namespace reachcert
