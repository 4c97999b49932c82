#include "reachcert/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "reachcert/kernels.hpp"

namespace reachcert {

using namespace racing;

// ---------------------------------------------------------------- policies

PolicyHandle make_racing_surrogate(const SurrogateConfig& cfg, const RacingSpec& spec, std::string id) {
  require(cfg.bound > 0.0 && cfg.activation > 0.0, "surrogate: bound and activation must be positive");
  PolicyHandle p;
  p.id = std::move(id);
  p.deterministic = true;
  p.evaluate = [cfg, spec](const StateVector& x) {
    require(x.size() == kStateDim, "surrogate: expects the 12-D joint state");
    const double* e = x.values().data() + kEgo;
    const double* o = x.values().data() + kOpp;
    // Lateral clearance needed over the next `lookahead` seconds: full
    // downwash clearance if the drones come level in that window, less as
    // the longitudinal gap opens.
    const double dy = e[kPy] - o[kPy];
    const double dy_end = dy + (e[kVy] - o[kVy]) * cfg.lookahead;
    const double gap = (dy < 0.0) != (dy_end < 0.0) ? 0.0 : std::min(std::abs(dy), std::abs(dy_end));
    const double need = (1.0 + std::max(o[kPz] - e[kPz], 0.0)) * spec.downwash_scale + cfg.clearance;
    const double offset = std::min(cfg.side_offset, std::sqrt(std::max(0.0, need - gap * gap)));
    const bool ahead = dy > cfg.ahead_threshold;
    double wx = 0.0;
    if (!ahead) {
      const double side = e[kPx] - o[kPx] >= 0.0 ? 1.0 : -1.0;
      wx = o[kPx] + side * offset;
    }
    // Largest lateral offset from which a bang-bang merge at merge_accel
    // still reaches the centerline by the gate.
    const double to_gate = std::max(0.0, spec.wall_margin - e[kPy]) / std::max(e[kVy], 0.1);
    const double lim = 0.25 * cfg.merge_accel * to_gate * to_gate;
    wx = std::clamp(wx, -lim, lim);
    const double vy_des = std::min(cfg.max_speed, o[kVy] + cfg.lead_speed);
    // Stiffen lateral tracking as the gate nears: terminal guidance gains
    // 6/tau^2, 4/tau null position and velocity by the crossing.
    const double tau = std::max(to_gate, 0.2);
    const double kp = std::max(cfg.kp, 6.0 / (tau * tau));
    const double kd = std::max(cfg.kd, 4.0 / tau);
    double u[3] = {
        -kp * (e[kPx] - wx) - kd * e[kVx],
        cfg.kv * (vy_des - e[kVy]),
        -kp * e[kPz] - kd * e[kVz],
    };
    const double m = racing_downwash_margin(spec, x.span());
    if (m < cfg.activation) {
      const double dz = o[kPz] - e[kPz];
      // The forward component only ever pushes ahead; braking behind the opponent loses the race.
      double g[3] = {2.0 * (e[kPx] - o[kPx]), std::max(0.0, 2.0 * (e[kPy] - o[kPy])),
                     dz > 0.0 ? spec.downwash_scale : 0.0};
      const double n = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
      if (n > 0.0) {
        const double s = cfg.repulse_gain * (cfg.activation - m) / cfg.activation / n;
        for (int i = 0; i < 3; ++i) u[i] += s * g[i];
      }
    }
    ControlVector out(3);
    for (int i = 0; i < 3; ++i) out[i] = std::clamp(u[i], -cfg.bound, cfg.bound);
    return out;
  };
  return p;
}

PolicyHandle make_quantized_pd(double goal, double kp, double kd, std::vector<double> levels, std::string id) {
  require(!levels.empty(), "quantized pd: need at least one control level");
  std::sort(levels.begin(), levels.end());
  PolicyHandle p;
  p.id = std::move(id);
  p.deterministic = true;
  p.evaluate = [goal, kp, kd, levels](const StateVector& x) {
    require(x.size() == 2, "quantized pd: expects [p, v]");
    const double raw = std::clamp(-kp * (x[0] - goal) - kd * x[1], levels.front(), levels.back());
    double best = levels.front();
    for (double l : levels) {
      if (std::abs(l - raw) < std::abs(best - raw)) best = l;
    }
    return ControlVector{best};
  };
  return p;
}

// ---------------------------------------------------------------- MPPI

const char* warm_start_name(WarmStart w) {
  switch (w) {
    case WarmStart::none: return "none";
    case WarmStart::policy: return "policy";
    case WarmStart::previous: return "previous";
  }
  return "unknown";
}

bool parse_warm_start(const std::string& text, WarmStart& out) {
  for (WarmStart w : {WarmStart::none, WarmStart::policy, WarmStart::previous}) {
    if (text == warm_start_name(w)) {
      out = w;
      return true;
    }
  }
  return false;
}

void MPPIConfig::validate(std::size_t control_dim) const {
  require(horizon >= 1 && samples >= 1, "mppi: horizon and sample count must be >= 1");
  require(lambda > 0.0 && std::isfinite(lambda), "mppi: temperature must be positive");
  require(sigma.size() == 1 || sigma.size() == control_dim, "mppi: sigma needs one entry or one per control axis");
  for (double s : sigma) require(s >= 0.0 && std::isfinite(s), "mppi: noise sigma must be nonnegative");
}

std::vector<double> softmax_weights(std::span<const double> costs, double lambda) {
  require(!costs.empty(), "softmax: empty cost vector");
  double lo = std::numeric_limits<double>::infinity();
  std::size_t best = costs.size();
  for (std::size_t k = 0; k < costs.size(); ++k) {
    if (std::isfinite(costs[k]) && costs[k] < lo) {
      lo = costs[k];
      best = k;
    }
  }
  if (best == costs.size()) throw ContractViolation("mppi: every rollout produced a non-finite cost");
  std::vector<double> w(costs.size(), 0.0);
  if (lambda < 1e-9) {
    w[best] = 1.0;
    return w;
  }
  double total = 0.0;
  for (std::size_t k = 0; k < costs.size(); ++k) {
    if (!std::isfinite(costs[k])) continue;
    w[k] = std::exp(-(costs[k] - lo) / lambda);
    total += w[k];
  }
  for (double& v : w) v /= total;
  return w;
}

namespace {

// Runs K control sequences (rows[k*H*m + t*m + a]) from x and accumulates cost.
std::vector<double> batch_costs(RolloutCost& cost, const System& system, const StateVector& x,
                                const std::vector<double>& rows, std::size_t K, std::size_t H) {
  const std::size_t m = system.control_dim();
  StateBatch X(system.state_dim(), K);
  X.fill_columns(x.span());
  StateBatch U(m, K);
  std::vector<double> costs(K, 0.0);
  cost.begin(K);
  for (std::size_t t = 0; t < H; ++t) {
    for (std::size_t a = 0; a < m; ++a) {
      double* u = U.row(a);
      for (std::size_t k = 0; k < K; ++k) u[k] = rows[k * H * m + t * m + a];
    }
    system.step_batch(X, U);
    cost.running(t, X, U, costs.data());
  }
  return costs;
}

}  // namespace

MPPIResult mppi_step(const MPPIConfig& cfg, RolloutCost& cost, const System& system, const StateVector& x,
                     const ControlSequence& warm, std::uint64_t step_seed) {
  const std::size_t m = system.control_dim();
  cfg.validate(m);
  require(x.size() == system.state_dim(), "mppi: state dimension mismatch");
  require(warm.empty() || warm.size() == cfg.horizon, "mppi: warm start must have length H");
  const std::size_t H = cfg.horizon, K = cfg.samples, len = H * m;
  const double bound = system.spec().control_bound;

  std::vector<double> mean(len, 0.0);
  for (std::size_t t = 0; t < warm.size(); ++t) {
    require(warm[t].size() == m, "mppi: warm-start control dimension mismatch");
    for (std::size_t a = 0; a < m; ++a) mean[t * m + a] = warm[t][a];
  }

  std::vector<double> rows(K * len);
  for (std::size_t k = 0; k < K; ++k) {
    double* r = rows.data() + k * len;
    if (k == 0) {
      for (std::size_t j = 0; j < len; ++j) r[j] = mean[j];
    } else {
      std::mt19937_64 rng(mix_seed(step_seed, k));
      std::normal_distribution<double> n01(0.0, 1.0);
      for (std::size_t j = 0; j < len; ++j) {
        const double s = cfg.sigma.size() == 1 ? cfg.sigma[0] : cfg.sigma[j % m];
        r[j] = mean[j] + s * n01(rng);
      }
    }
    kernels::active().clamp(r, len, -bound, bound);
  }

  MPPIResult out;
  out.costs = batch_costs(cost, system, x, rows, K, H);
  out.weights = softmax_weights(out.costs, cfg.lambda);
  std::vector<double> avg(len);
  kernels::active().weighted_row_sum(out.weights.data(), rows.data(), K, len, avg.data());
  kernels::active().clamp(avg.data(), len, -bound, bound);
  out.sequence.resize(H);
  for (std::size_t t = 0; t < H; ++t) {
    out.sequence[t] = ControlVector(std::vector<double>(avg.begin() + t * m, avg.begin() + (t + 1) * m));
  }
  out.control = out.sequence.front();
  return out;
}

ControlSequence shift_sequence(const ControlSequence& seq) {
  if (seq.empty()) return {};
  ControlSequence out(seq.begin() + 1, seq.end());
  out.push_back(seq.back());
  return out;
}

ControlSequence policy_unroll(const System& system, const PolicyHandle& policy, const StateVector& x, std::size_t H) {
  return rollout(system, x, policy, H).controls;
}

double sequence_cost(RolloutCost& cost, const System& system, const StateVector& x, const ControlSequence& seq) {
  require(!seq.empty(), "sequence_cost: empty control sequence");
  const std::size_t m = system.control_dim();
  std::vector<double> rows(seq.size() * m);
  const double bound = system.spec().control_bound;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    require(seq[t].size() == m, "sequence_cost: control dimension mismatch");
    for (std::size_t a = 0; a < m; ++a) rows[t * m + a] = std::clamp(seq[t][a], -bound, bound);
  }
  return batch_costs(cost, system, x, rows, 1, seq.size())[0];
}

// ---------------------------------------------------------------- racing costs

const char* cost_kind_name(RacingCostKind k) {
  switch (k) {
    case RacingCostKind::plain_goal: return "plain-goal";
    case RacingCostKind::fast_goal: return "fast-goal";
    case RacingCostKind::soft_constraint: return "soft-constraint";
    case RacingCostKind::recovery: return "recovery";
  }
  return "unknown";
}

bool parse_cost_kind(const std::string& text, RacingCostKind& out) {
  for (RacingCostKind k : {RacingCostKind::plain_goal, RacingCostKind::fast_goal, RacingCostKind::soft_constraint,
                           RacingCostKind::recovery}) {
    if (text == cost_kind_name(k)) {
      out = k;
      return true;
    }
  }
  return false;
}

double racing_episode_margin(const RacingSpec& spec, std::span<const double> x) {
  const double dw = racing_downwash_margin(spec, x);
  if (x[kEgo + kPy] >= 0.0) return dw;
  return std::min(dw, racing_gate_wall_margin(spec, x));
}

namespace {

double sq(double v) { return v * v; }

double goal_term(const RacingCostConfig& cfg, const double* e, const double* u) {
  const double d = std::sqrt(sq(e[kPx] - cfg.goal[0]) + sq(e[kPy] - cfg.goal[1]) + sq(e[kPz] - cfg.goal[2]));
  const double slow = std::max(0.0, cfg.desired_speed - e[kVy]);
  return cfg.w_goal * d + cfg.w_speed * slow * slow + cfg.w_lateral_speed * (sq(e[kVx]) + sq(e[kVz])) +
         cfg.w_control * (sq(u[0]) + sq(u[1]) + sq(u[2]));
}

double barrier_term(const RacingCostConfig& cfg, double margin) {
  double b = 0.0;
  if (margin <= 0.0) b += cfg.violation_penalty;
  if (margin < cfg.barrier_margin) b += cfg.barrier_weight * sq((cfg.barrier_margin - margin) / cfg.barrier_margin);
  return b;
}

}  // namespace

RacingCost::RacingCost(RacingCostKind kind, RacingSpec spec, RacingCostConfig cfg)
    : kind_(kind), spec_(std::move(spec)), cfg_(cfg) {
  require(cfg_.barrier_margin > 0.0, "racing cost: barrier margin must be positive");
}

void RacingCost::set_certificates(const GlobalCertificate* global, const std::vector<LocalCertificate>* locals) {
  global_ = global;
  locals_ = locals;
}

void RacingCost::begin(std::size_t samples) {
  if (kind_ == RacingCostKind::recovery) {
    const bool any_global = global_ != nullptr && global_->certified_count() > 0;
    const bool any_local = locals_ != nullptr && !locals_->empty();
    has_region_ = any_global || any_local;
  }
  reentered_.assign(samples, 0);
  a_.resize(samples);
  b_.resize(samples);
  c_.resize(samples);
}

bool RacingCost::any_reentered() const {
  return std::any_of(reentered_.begin(), reentered_.end(), [](char c) { return c != 0; });
}

void RacingCost::running(std::size_t, const StateBatch& x, const StateBatch& u, double* cost) {
  const std::size_t K = x.count();
  require(x.dim() == kStateDim && u.dim() == kControlDim, "racing cost: expects the 12-D joint batch");
  if (a_.size() != K) begin(K);
  const auto& kt = kernels::active();
  kt.downwash_margin(x.row(kEgo + kPx), x.row(kEgo + kPy), x.row(kEgo + kPz), x.row(kOpp + kPx), x.row(kOpp + kPy),
                     x.row(kOpp + kPz), K, spec_.downwash_scale, a_.data());
  kt.gate_wall_margin(x.row(kEgo + kPx), x.row(kEgo + kPy), x.row(kEgo + kPz), K, spec_.wall_margin, b_.data());
  if (kind_ == RacingCostKind::fast_goal) {
    kt.lead_corridor_margin(x.row(kEgo + kPx), x.row(kEgo + kPy), x.row(kEgo + kVy), x.row(kEgo + kPz),
                            x.row(kOpp + kPy), x.row(kOpp + kVy), K, spec_.corridor_half_width, spec_.lead_position,
                            spec_.lead_velocity, c_.data());
  }
  std::vector<double> col(kStateDim);
  for (std::size_t k = 0; k < K; ++k) {
    double e[6], uk[3];
    for (std::size_t i = 0; i < 6; ++i) e[i] = x.at(kEgo + i, k);
    for (std::size_t i = 0; i < 3; ++i) uk[i] = u.at(i, k);
    const double margin = e[kPy] < 0.0 ? std::min(a_[k], b_[k]) : a_[k];
    double s = 0.0;
    switch (kind_) {
      case RacingCostKind::plain_goal:
        s = goal_term(cfg_, e, uk);
        break;
      case RacingCostKind::fast_goal:
        s = goal_term(cfg_, e, uk) + cfg_.target_penalty * std::max(0.0, -c_[k]) + barrier_term(cfg_, margin);
        break;
      case RacingCostKind::soft_constraint:
        s = goal_term(cfg_, e, uk) + cfg_.soft_penalty * std::max(0.0, -margin);
        break;
      case RacingCostKind::recovery: {
        // Without any certified region only the goal and barrier terms remain.
        double d = 0.0;
        if (has_region_) {
          x.get_column(k, col);
          static const std::vector<LocalCertificate> none;
          d = certified_distance(global_, locals_ ? *locals_ : none, col);
          if (d <= 0.0) reentered_[k] = 1;
        }
        s = cfg_.recovery_weight * d + cfg_.recovery_goal_weight * goal_term(cfg_, e, uk) + barrier_term(cfg_, margin);
        break;
      }
    }
    cost[k] += s;
  }
}

double certified_distance(const GlobalCertificate* global, const std::vector<LocalCertificate>& locals,
                          std::span<const double> x) {
  const bool any_global = global != nullptr && global->certified_count() > 0;
  require(any_global || !locals.empty(), "certified_distance: no certified region available");
  double best = any_global ? global->distance_to_certified(x) : std::numeric_limits<double>::infinity();
  for (const auto& lc : locals) {
    if (best <= 0.0) break;
    best = std::min(best, std::max(0.0, local_distance(lc, x) - lc.radius));
  }
  return best;
}

double recovery_cost(const GlobalCertificate* global, const std::vector<LocalCertificate>& locals,
                     const Trajectory& traj, const RacingSpec& spec, const RacingCostConfig& cfg) {
  require(!traj.states.empty(), "recovery_cost: empty trajectory");
  double total = 0.0;
  for (const auto& s : traj.states) {
    total += certified_distance(global, locals, s.span()) + barrier_term(cfg, racing_episode_margin(spec, s.span()));
  }
  return total;
}

// ---------------------------------------------------------------- CBF

namespace {

// Value and ego-position gradient of the uncapped downwash margin.
double downwash_with_grad(const RacingSpec& spec, const StateVector& x, double g[3]) {
  const double* e = x.values().data() + kEgo;
  const double* o = x.values().data() + kOpp;
  const double dz = o[kPz] - e[kPz];
  g[0] = 2.0 * (e[kPx] - o[kPx]);
  g[1] = 2.0 * (e[kPy] - o[kPy]);
  g[2] = dz > 0.0 ? spec.downwash_scale : 0.0;
  return racing_downwash_margin(spec, x.span());
}

// Gate wall i in {0..3}: (s * p_lat) - p_y + wall.
double wall_with_grad(const RacingSpec& spec, const StateVector& x, int i, double g[3]) {
  const double* e = x.values().data() + kEgo;
  const double s = (i % 2 == 0) ? 1.0 : -1.0;
  const std::size_t lat = i < 2 ? kPx : kPz;
  g[0] = lat == kPx ? s : 0.0;
  g[1] = -1.0;
  g[2] = lat == kPz ? s : 0.0;
  return s * e[lat] - e[kPy] + spec.wall_margin;
}

}  // namespace

std::vector<LinearConstraint> cbf_constraints(const CbfConfig& cfg, const RacingSpec& spec,
                                              const OpponentPolicyConfig& opponent, const StateVector& x,
                                              const ControlVector& u_nom) {
  require(x.size() == kStateDim && u_nom.size() == kControlDim, "cbf: expects 12-D state and 3-D control");
  require(cfg.alpha > 0.0 && cfg.dt > 0.0 && cfg.alpha * cfg.dt < 1.0, "cbf: need alpha > 0 and alpha*dt < 1");
  const RacingSystem sys(cfg.dt, std::numeric_limits<double>::max(), opponent);
  const StateVector x1 = sys.step(x, u_nom);
  // Ego positions at t+2 depend on u only through v+ = v + u dt.
  const StateVector x2 = sys.step(x1, ControlVector(kControlDim));
  const double dt = cfg.dt, alpha = cfg.alpha;

  std::vector<LinearConstraint> rows;
  auto add = [&](auto&& h) {
    double g0[3], g1[3], g2[3];
    const double h0 = h(x, g0), h1 = h(x1, g1), h2 = h(x2, g2);
    const double psi0 = (h1 - h0) / dt + alpha * h0;
    const double psi1 = (h2 - h1) / dt + alpha * h1;
    LinearConstraint c;
    double au = 0.0;
    for (int i = 0; i < 3; ++i) {
      c.a[i] = g2[i] * dt;
      au += c.a[i] * u_nom[i];
    }
    c.b = (1.0 - alpha * dt) * psi0 - psi1 + au;
    rows.push_back(c);
  };
  add([&](const StateVector& s, double g[3]) { return downwash_with_grad(spec, s, g); });
  if (cfg.gate_walls && x[kEgo + kPy] < 0.0) {
    // Wall rows hold the forward position fixed: the funnel narrows to 0.05 m at
    // the gate plane, so a barrier on forward progress would stop the ego there.
    for (int i = 0; i < 4; ++i) {
      add([&](const StateVector& s, double g[3]) {
        StateVector frozen = s;
        frozen[kEgo + kPy] = x[kEgo + kPy];
        const double h = wall_with_grad(spec, frozen, i, g);
        g[1] = 0.0;
        return h;
      });
    }
  }
  return rows;
}

namespace {

// Solves the k x k system M y = r in place (k <= 3); false when singular.
bool solve_small(double M[3][3], double r[3], int k) {
  for (int c = 0; c < k; ++c) {
    int piv = c;
    for (int i = c + 1; i < k; ++i) {
      if (std::abs(M[i][c]) > std::abs(M[piv][c])) piv = i;
    }
    if (std::abs(M[piv][c]) < 1e-12) return false;
    if (piv != c) {
      for (int j = 0; j < k; ++j) std::swap(M[c][j], M[piv][j]);
      std::swap(r[c], r[piv]);
    }
    for (int i = c + 1; i < k; ++i) {
      const double f = M[i][c] / M[c][c];
      for (int j = c; j < k; ++j) M[i][j] -= f * M[c][j];
      r[i] -= f * r[c];
    }
  }
  for (int c = k - 1; c >= 0; --c) {
    for (int j = c + 1; j < k; ++j) r[c] -= M[c][j] * r[j];
    r[c] /= M[c][c];
  }
  return true;
}

}  // namespace

BoxQpResult solve_box_qp(const std::array<double, 3>& u_nom, std::span<const LinearConstraint> rows, double bound,
                         double tol) {
  require(bound > 0.0, "box qp: bound must be positive");
  std::vector<LinearConstraint> all(rows.begin(), rows.end());
  for (int i = 0; i < 3; ++i) {
    LinearConstraint up, lo;
    up.a[i] = -1.0;
    up.b = -bound;
    lo.a[i] = 1.0;
    lo.b = -bound;
    all.push_back(up);
    all.push_back(lo);
  }
  const int n = static_cast<int>(all.size());
  auto feasible = [&](const std::array<double, 3>& u) {
    for (const auto& c : all) {
      const double lhs = c.a[0] * u[0] + c.a[1] * u[1] + c.a[2] * u[2];
      if (lhs < c.b - tol * (1.0 + std::abs(c.b))) return false;
    }
    return true;
  };

  BoxQpResult best;
  double best_obj = std::numeric_limits<double>::infinity();
  auto consider = [&](const int* idx, int k) {
    std::array<double, 3> u = u_nom;
    if (k > 0) {
      double M[3][3], r[3];
      for (int i = 0; i < k; ++i) {
        const auto& ci = all[idx[i]];
        r[i] = ci.b - (ci.a[0] * u_nom[0] + ci.a[1] * u_nom[1] + ci.a[2] * u_nom[2]);
        for (int j = 0; j < k; ++j) {
          const auto& cj = all[idx[j]];
          M[i][j] = ci.a[0] * cj.a[0] + ci.a[1] * cj.a[1] + ci.a[2] * cj.a[2];
        }
      }
      if (!solve_small(M, r, k)) return;
      for (int i = 0; i < k; ++i) {
        for (int d = 0; d < 3; ++d) u[d] += r[i] * all[idx[i]].a[d];
      }
    }
    if (!feasible(u)) return;
    const double obj = sq(u[0] - u_nom[0]) + sq(u[1] - u_nom[1]) + sq(u[2] - u_nom[2]);
    if (obj < best_obj) {
      best_obj = obj;
      best.u = u;
      best.feasible = true;
    }
  };
  int idx[3];
  consider(idx, 0);
  for (int a = 0; a < n; ++a) {
    idx[0] = a;
    consider(idx, 1);
    for (int b = a + 1; b < n; ++b) {
      idx[1] = b;
      consider(idx, 2);
      for (int c = b + 1; c < n; ++c) {
        idx[2] = c;
        consider(idx, 3);
      }
    }
  }
  return best;
}

ControlVector cbf_filter(const CbfConfig& cfg, const RacingSpec& spec, const OpponentPolicyConfig& opponent,
                         const StateVector& x, const ControlVector& u_nom, double bound, bool* feasible) {
  ControlVector nom(kControlDim);
  for (std::size_t i = 0; i < kControlDim; ++i) nom[i] = std::clamp(u_nom[i], -bound, bound);
  const auto rows = cbf_constraints(cfg, spec, opponent, x, nom);
  const BoxQpResult qp = solve_box_qp({nom[0], nom[1], nom[2]}, rows, bound);
  if (feasible) *feasible = qp.feasible;
  ControlVector out(kControlDim);
  if (qp.feasible) {
    for (std::size_t i = 0; i < kControlDim; ++i) out[i] = qp.u[i];
  } else {
    // Box vertex maximizing the linearized downwash barrier at t+2.
    for (std::size_t i = 0; i < kControlDim; ++i) out[i] = rows[0].a[i] >= 0.0 ? bound : -bound;
  }
  return out;
}

}  // namespace reachcert
