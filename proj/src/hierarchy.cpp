#include "reachcert/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace reachcert {

using namespace racing;

const char* tier_name(Tier t) {
  switch (t) {
    case Tier::none: return "none";
    case Tier::target: return "target";
    case Tier::global: return "global";
    case Tier::local: return "local";
    case Tier::recovery: return "recovery";
  }
  return "unknown";
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::success: return "success";
    case Outcome::collision: return "collision";
    case Outcome::timeout: return "timeout";
    case Outcome::lost: return "lost";
  }
  return "unknown";
}

HierarchicalController::HierarchicalController(const RacingSystem& system, RacingSpec spec, RewardConstraintSpec rc,
                                               const PolicyHandle& policy, const GlobalCertificate& cert,
                                               HierarchyConfig cfg)
    : system_(system),
      spec_(std::move(spec)),
      rc_(std::move(rc)),
      policy_(policy),
      cert_(cert),
      cfg_(std::move(cfg)),
      fast_cost_(RacingCostKind::fast_goal, spec_, cfg_.cost),
      recovery_cost_(RacingCostKind::recovery, spec_, cfg_.cost),
      plain_cost_(RacingCostKind::plain_goal, spec_, cfg_.cost) {
  require(cert_.policy_id == policy_.id,
          "hierarchy: certificate issued for policy '" + cert_.policy_id + "', not '" + policy_.id + "'");
  require(cert_.embedding.full_dim() == kStateDim, "hierarchy: certificate must cover the 12-D racing state");
  cfg_.fast.validate(kControlDim);
  cfg_.recovery.validate(kControlDim);
  cfg_.ablation.validate(kControlDim);
  if (cfg_.refine_enabled) cfg_.refine.validate();
  recovery_cost_.set_certificates(&cert_, &cache_);
  seed_ = cfg_.seed;
}

void HierarchicalController::reset(std::uint64_t seed) {
  seed_ = seed;
  cache_.clear();
  failed_.clear();
  previous_.clear();
  previous_slot_ = -1;
}

void HierarchicalController::evict_drifted(const StateVector& x) {
  // The refined balls pin the dropped coordinates; once those drift past
  // eps_x the cached answer no longer describes the current situation.
  const double lim2 = cert_.eps_x * cert_.eps_x;
  std::erase_if(cache_, [&](const LocalCertificate& lc) { return lc.embedding.residual2(x.span()) > lim2; });
  std::erase_if(failed_, [&](const Attempt& a) { return a.embedding.residual2(x.span()) > lim2; });
}

ControlVector HierarchicalController::run_mppi(const MPPIConfig& mc, RacingCost& cost, const StateVector& x,
                                               int slot, bool policy_warm, std::uint64_t seed) {
  // Policy warm starts are unavailable in the ablation; each mode falls back to the other source.
  ControlSequence warm;
  const bool have_previous = previous_slot_ == slot && previous_.size() == mc.horizon;
  switch (mc.warm_start) {
    case WarmStart::none:
      break;
    case WarmStart::previous:
      if (have_previous) {
        warm = shift_sequence(previous_);
      } else if (policy_warm) {
        warm = policy_unroll(system_, policy_, x, mc.horizon);
      }
      break;
    case WarmStart::policy:
      if (policy_warm) {
        warm = policy_unroll(system_, policy_, x, mc.horizon);
      } else if (have_previous) {
        warm = shift_sequence(previous_);
      }
      break;
  }
  MPPIResult r = mppi_step(mc, cost, system_, x, warm, seed);
  previous_ = std::move(r.sequence);
  previous_slot_ = slot;
  return r.control;
}

TierDecision HierarchicalController::act(const StateVector& x, std::size_t step) {
  require(x.size() == kStateDim, "hierarchy: expects the 12-D joint state");
  TierDecision d;
  const std::uint64_t step_seed = mix_seed(seed_, step);
  const bool use_policy = !cfg_.ablation_mppi;

  // Tier 0: target maintenance.
  d.diag.reward = racing_reward(spec_, x.span());
  if (d.diag.reward > 0.0) {
    d.tier = Tier::target;
    d.control = run_mppi(cfg_.fast, fast_cost_, x, 0, use_policy, mix_seed(step_seed, 0));
    return d;
  }

  // Tier 1: global certificate.
  d.diag.in_global = cert_.is_member(x.span());
  d.diag.global_distance = cert_.distance_to_certified(x.span());
  auto certified_control = [&]() {
    if (use_policy) {
      previous_slot_ = -1;
      return system_.clamp(policy_(x));
    }
    return run_mppi(cfg_.ablation, plain_cost_, x, 1, false, mix_seed(step_seed, 1));
  };
  if (d.diag.in_global) {
    d.tier = Tier::global;
    d.control = certified_control();
    return d;
  }

  // Tier 2: cached or fresh local refinement.
  evict_drifted(x);
  const LocalCertificate* hit = nullptr;
  double closest = std::numeric_limits<double>::infinity();
  for (const auto& lc : cache_) {
    const double dist = local_distance(lc, x.span());
    if (dist <= lc.radius && local_member(lc, x, policy_.id)) {
      hit = &lc;
      d.diag.cache_hit = true;
      d.diag.local_distance = dist;
      break;
    }
    closest = std::min(closest, dist - lc.radius);
  }
  if (hit == nullptr && cfg_.refine_enabled && cert_.boundary_count() > 0) {
    const BoundaryHit bh = cert_.nearest_boundary(x.span());
    const bool tried = std::any_of(cache_.begin(), cache_.end(),
                                   [&](const LocalCertificate& lc) { return lc.boundary_record == bh.record; }) ||
                       std::any_of(failed_.begin(), failed_.end(),
                                   [&](const Attempt& a) { return a.record == bh.record; });
    if (!tried) {
      d.diag.refine_attempted = true;
      RefineConfig rc = cfg_.refine;
      rc.seed = mix_seed(step_seed, 2);
      RefineResult res = iterative_growth(rc, system_, rc_, policy_, cert_, x);
      d.diag.refine_status = res.status;
      d.diag.refine_iterations = res.history.size();
      if (res.ok()) {
        res.certificate->created_step = step;
        if (cache_.size() >= cfg_.max_cached) cache_.erase(cache_.begin());
        cache_.push_back(std::move(*res.certificate));
        const LocalCertificate& lc = cache_.back();
        const double dist = local_distance(lc, x.span());
        if (local_member(lc, x, policy_.id)) {
          hit = &lc;
          d.diag.local_distance = dist;
        } else {
          closest = std::min(closest, dist - lc.radius);
        }
      } else {
        failed_.push_back({bh.record, cert_.embedding.with_context_of(x.span())});
      }
    }
  }
  d.diag.cached_locals = cache_.size();
  if (hit != nullptr) {
    d.tier = Tier::local;
    d.local = *hit;
    d.control = certified_control();
    return d;
  }
  d.diag.local_distance = closest;

  // Tier 3: recovery toward the certified regions.
  d.tier = Tier::recovery;
  d.control = run_mppi(cfg_.recovery, recovery_cost_, x, 3, use_policy, mix_seed(step_seed, 3));
  d.diag.recovery_reentry = recovery_cost_.any_reentered();
  return d;
}

namespace {

bool violates(const RacingSpec& spec, const StateVector& x) { return racing_episode_margin(spec, x.span()) <= 0.0; }

// Fraction along x -> y where p_y of the block at `base` reaches 0.
double crossing_fraction(const StateVector& x, const StateVector& y, std::size_t base) {
  const double a = x[base + kPy], b = y[base + kPy];
  return b == a ? 1.0 : -a / (b - a);
}

bool crosses(const StateVector& x, const StateVector& y, std::size_t base) {
  return x[base + kPy] < 0.0 && y[base + kPy] >= 0.0;
}

}  // namespace

EpisodeLog run_episode(Controller& controller, const RacingSystem& system, const RacingSpec& spec,
                       const StateVector& x0, std::size_t steps) {
  require(steps >= 1, "run_episode: need at least one step");
  require(x0.size() == kStateDim && x0.all_finite(), "run_episode: invalid initial state");
  EpisodeLog log;
  StateVector x = x0;
  const double bound = system.spec().control_bound;
  for (std::size_t t = 0;; ++t) {
    if (violates(spec, x)) {
      log.outcome = Outcome::collision;
      break;
    }
    if (t == steps) {
      log.outcome = Outcome::timeout;
      break;
    }
    StepRecord rec;
    rec.t = t;
    rec.state = x;
    rec.reward = racing_reward(spec, x.span());
    rec.downwash = racing_downwash_margin(spec, x.span());
    rec.wall = racing_gate_wall_margin(spec, x.span());
    rec.decision = controller.act(x, t);
    for (std::size_t i = 0; i < rec.decision.control.size(); ++i) {
      rec.decision.control[i] = std::clamp(rec.decision.control[i], -bound, bound);
    }
    const int tier = static_cast<int>(rec.decision.tier);
    if (tier >= 0 && tier < 4) ++log.tier_histogram[tier];
    const StateVector next = system.step(x, rec.decision.control);
    log.steps.push_back(std::move(rec));

    const bool ego = crosses(x, next, kEgo);
    const bool opp = crosses(x, next, kOpp);
    if (opp && !log.opponent_cross) log.opponent_cross = t;
    if (ego) {
      log.ego_cross = t;
      const double f = crossing_fraction(x, next, kEgo);
      const double px = x[kEgo + kPx] + f * (next[kEgo + kPx] - x[kEgo + kPx]);
      const double pz = x[kEgo + kPz] + f * (next[kEgo + kPz] - x[kEgo + kPz]);
      const bool inside = std::abs(px) < spec.corridor_half_width && std::abs(pz) < spec.corridor_half_width;
      x = next;
      if (log.opponent_cross) {
        log.outcome = Outcome::lost;
      } else if (!inside || violates(spec, x)) {
        log.outcome = Outcome::collision;
      } else {
        log.outcome = Outcome::success;
      }
      break;
    }
    x = next;
    if (log.opponent_cross) {
      log.outcome = violates(spec, x) ? Outcome::collision : Outcome::lost;
      break;
    }
  }
  log.final_state = x;
  return log;
}

void write_episode_csv(std::ostream& out, const EpisodeLog& log) {
  static const char* names[12] = {"ex", "evx", "ey", "evy", "ez", "evz", "ox", "ovx", "oy", "ovy", "oz", "ovz"};
  out << "t";
  for (const char* n : names) out << ',' << n;
  out << ",tier,reward,downwash,wall,ux,uy,uz\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    out << ',' << buf;
  };
  for (const auto& s : log.steps) {
    out << s.t;
    for (std::size_t i = 0; i < s.state.size(); ++i) num(s.state[i]);
    out << ',' << tier_name(s.decision.tier);
    num(s.reward);
    num(s.downwash);
    num(s.wall);
    for (std::size_t i = 0; i < s.decision.control.size(); ++i) num(s.decision.control[i]);
    out << '\n';
  }
}

std::string episode_summary(const EpisodeLog& log) {
  std::ostringstream s;
  s << "outcome=" << outcome_name(log.outcome) << " steps=" << log.steps.size() << " tiers=" << log.tier_histogram[0]
    << ',' << log.tier_histogram[1] << ',' << log.tier_histogram[2] << ',' << log.tier_histogram[3];
  return s.str();
}

}  // namespace reachcert
