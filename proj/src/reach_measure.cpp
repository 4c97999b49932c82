#include "reachcert/reach_measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "reachcert/kernels.hpp"
#include "reachcert/systems.hpp"

namespace reachcert {

void RewardConstraintSpec::validate() const {
  require(static_cast<bool>(reward) && static_cast<bool>(constraint), "reward/constraint functions missing");
  require(lipschitz_reward >= 0.0 && lipschitz_constraint >= 0.0, "Lipschitz constants must be nonnegative");
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
}

double discounted_reach_avoid(std::span<const double> r, std::span<const double> c, double gamma) {
  require(!r.empty() && r.size() == c.size(), "discounted_reach_avoid: margin sequences must align");
  double best = -std::numeric_limits<double>::infinity();
  double running = std::numeric_limits<double>::infinity();
  double w = 1.0;
  for (std::size_t t = 0; t < r.size(); ++t) {
    running = std::min(running, w * c[t]);
    best = std::max(best, std::min(w * r[t], running));
    w *= gamma;
  }
  return best;
}

double ra_measure(const RewardConstraintSpec& spec, const Trajectory& traj, std::size_t t) {
  require(t < traj.states.size(), "ra_measure: step index out of range");
  double running = std::numeric_limits<double>::infinity();
  double w = 1.0;
  for (std::size_t tau = 0; tau <= t; ++tau) {
    running = std::min(running, w * spec.constraint(traj.states[tau].span()));
    if (tau < t) w *= spec.gamma;
  }
  return std::min(w * spec.reward(traj.states[t].span()), running);
}

double rollout_value(const RewardConstraintSpec& spec, const Trajectory& traj) {
  require(!traj.states.empty(), "rollout_value: empty trajectory");
  std::vector<double> r(traj.states.size()), c(traj.states.size());
  for (std::size_t t = 0; t < traj.states.size(); ++t) {
    r[t] = spec.reward(traj.states[t].span());
    c[t] = spec.constraint(traj.states[t].span());
  }
  return discounted_reach_avoid(r, c, spec.gamma);
}

void RacingSpec::validate() const {
  require(corridor_half_width > 0.0 && wall_margin > 0.0 && downwash_scale > 0.0, "racing margins must be positive");
  require(lead_position >= 0.0 && lead_velocity >= 0.0, "lead margins must be nonnegative");
  require(constraint_cap > 0.0, "constraint cap must be positive");
  require(operating_box.dim() == racing::kStateDim, "operating box must be 12-D");
  operating_box.validate_nondegenerate();
}

namespace {

using namespace racing;

void check_joint(std::span<const double> x) { require(x.size() == kStateDim, "racing: expects the 12-D joint state"); }

}  // namespace

double racing_reward(const RacingSpec& spec, std::span<const double> x) {
  check_joint(x);
  double out;
  kernels::active().lead_corridor_margin(&x[kEgo + kPx], &x[kEgo + kPy], &x[kEgo + kVy], &x[kEgo + kPz],
                                         &x[kOpp + kPy], &x[kOpp + kVy], 1, spec.corridor_half_width,
                                         spec.lead_position, spec.lead_velocity, &out);
  return out;
}

double racing_downwash_margin(const RacingSpec& spec, std::span<const double> x) {
  check_joint(x);
  double out;
  kernels::active().downwash_margin(&x[kEgo + kPx], &x[kEgo + kPy], &x[kEgo + kPz], &x[kOpp + kPx], &x[kOpp + kPy],
                                    &x[kOpp + kPz], 1, spec.downwash_scale, &out);
  return out;
}

double racing_gate_wall_margin(const RacingSpec& spec, std::span<const double> x) {
  check_joint(x);
  double out;
  kernels::active().gate_wall_margin(&x[kEgo + kPx], &x[kEgo + kPy], &x[kEgo + kPz], 1, spec.wall_margin, &out);
  return out;
}

double racing_constraint(const RacingSpec& spec, std::span<const double> x) {
  return std::min(std::min(racing_downwash_margin(spec, x), racing_gate_wall_margin(spec, x)), spec.constraint_cap);
}

double racing_reward_lipschitz(const RacingSpec&) {
  // Lead margins have gradient (1, -1) in (ego, opponent) coordinates; the
  // corridor margins have unit gradients.
  return std::sqrt(2.0);
}

double racing_constraint_lipschitz(const RacingSpec& spec) {
  spec.validate();
  const Box& b = spec.operating_box;
  auto span_of = [&](std::size_t e, std::size_t o) {
    return std::max(std::abs(b.hi[kEgo + e] - b.lo[kOpp + o]), std::abs(b.hi[kOpp + o] - b.lo[kEgo + e]));
  };
  const double dz_max = std::max(0.0, b.hi[kOpp + kPz] - b.lo[kEgo + kPz]);
  // Planar separation where the capped downwash term can be active.
  double planar2 = span_of(kPx, kPx) * span_of(kPx, kPx) + span_of(kPy, kPy) * span_of(kPy, kPy);
  if (std::isfinite(spec.constraint_cap)) {
    planar2 = std::min(planar2, spec.constraint_cap + (1.0 + dz_max) * spec.downwash_scale);
  }
  // grad of dx^2 + dy^2 - (1 + max(dz, 0)) s: (±2dx, ±2dy) twice, ±s on the heights.
  const double downwash = std::sqrt(8.0 * planar2 + 2.0 * spec.downwash_scale * spec.downwash_scale);
  return std::max(downwash, std::sqrt(2.0));
}

RewardConstraintSpec racing_reward_constraint(const RacingSpec& spec, double gamma) {
  spec.validate();
  RewardConstraintSpec out;
  out.reward = [spec](std::span<const double> x) { return racing_reward(spec, x); };
  out.constraint = [spec](std::span<const double> x) { return racing_constraint(spec, x); };
  out.lipschitz_reward = racing_reward_lipschitz(spec);
  out.lipschitz_constraint = racing_constraint_lipschitz(spec);
  out.gamma = gamma;
  out.validate();
  return out;
}

double lipschitz_estimate(const ScalarField& fn, const Box& domain, std::size_t samples, std::uint64_t seed) {
  require(samples >= 2, "lipschitz_estimate: need at least 2 samples");
  domain.validate_nondegenerate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double best = 0.0;
  const std::size_t pairs = samples / 2;
  for (std::size_t k = 0; k < pairs; ++k) {
    std::vector<double> x = domain.sample(rng);
    std::vector<double> y;
    if (k % 2 == 0) {
      y = domain.sample(rng);
    } else {
      y = x;
      for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = std::clamp(y[i] + 1e-4 * (domain.hi[i] - domain.lo[i]) * u(rng), domain.lo[i], domain.hi[i]);
      }
    }
    const double d = distance2(x, y);
    if (d <= 0.0) continue;
    best = std::max(best, std::abs(fn(x) - fn(y)) / d);
  }
  return best;
}

}  // namespace reachcert
