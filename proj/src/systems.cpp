#include "reachcert/systems.hpp"

#include <algorithm>
#include <cmath>

#include "reachcert/kernels.hpp"

namespace reachcert {

void SystemSpec::validate() const {
  require(state_dim >= 1 && control_dim >= 1, "system '" + name + "': dimensions must be >= 1");
  require(dt > 0.0 && std::isfinite(dt), "system '" + name + "': dt must be positive");
  require(control_bound > 0.0, "system '" + name + "': control bound must be positive");
  require(state_units.empty() || state_units.size() == state_dim, "system '" + name + "': unit list length");
}

System::System(SystemSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

StateVector System::step(const StateVector& x, const ControlVector& u) const {
  require(x.size() == spec_.state_dim, "step: state dimension mismatch");
  require(u.size() == spec_.control_dim, "step: control dimension mismatch");
  StateVector next = x;
  advance(next.values().data(), u.values().data(), 1);
  return next;
}

void System::step_batch(StateBatch& x, const StateBatch& u) const {
  require(x.dim() == spec_.state_dim && u.dim() == spec_.control_dim, "step_batch: dimension mismatch");
  require(x.count() == u.count(), "step_batch: batch size mismatch");
  if (x.count() == 0) return;
  advance(x.row(0), u.row(0), x.count());
}

ControlVector System::clamp(ControlVector u) const {
  require(u.size() == spec_.control_dim, "clamp: control dimension mismatch");
  kernels::active().clamp(u.values().data(), u.size(), -spec_.control_bound, spec_.control_bound);
  return u;
}

namespace {

SystemSpec double_integrator_spec(std::size_t axes, double dt, double bound) {
  SystemSpec s{"double_integrator_" + std::to_string(axes), 2 * axes, axes, bound, dt, {}};
  for (std::size_t a = 0; a < axes; ++a) {
    s.state_units.push_back(Unit::meter);
    s.state_units.push_back(Unit::meter_per_second);
  }
  return s;
}

}  // namespace

DoubleIntegrator::DoubleIntegrator(std::size_t axes, double dt, double control_bound)
    : System(double_integrator_spec(axes, dt, control_bound)) {}

void DoubleIntegrator::advance(double* x, const double* u, std::size_t count) const {
  const auto& k = kernels::active();
  for (std::size_t a = 0; a < control_dim(); ++a) {
    k.integrate_axis(x + (2 * a) * count, x + (2 * a + 1) * count, u + a * count, count, spec().dt);
  }
}

LinearSystem::LinearSystem(std::vector<double> a, std::vector<double> b, std::size_t n, std::size_t m, double dt,
                           double control_bound)
    : System(SystemSpec{"linear_" + std::to_string(n), n, m, control_bound, dt, {}}),
      a_(std::move(a)),
      b_(std::move(b)) {
  require(a_.size() == n * n, "LinearSystem: A must be n x n");
  require(b_.size() == n * m, "LinearSystem: B must be n x m");
}

void LinearSystem::advance(double* x, const double* u, std::size_t count) const {
  const std::size_t n = state_dim();
  const std::size_t m = control_dim();
  std::vector<double> column(n);
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += a_[i * n + j] * x[j * count + k];
      for (std::size_t j = 0; j < m; ++j) acc += b_[i * m + j] * u[j * count + k];
      column[i] = acc;
    }
    for (std::size_t i = 0; i < n; ++i) x[i * count + k] = column[i];
  }
}

LqrGain solve_axis_lqr(double dt, double q_pos, double q_vel, double r) {
  require(dt > 0.0 && q_pos >= 0.0 && q_vel >= 0.0 && r > 0.0, "solve_axis_lqr: invalid weights");
  // P symmetric 2x2 = [[p11, p12], [p12, p22]]; A = [[1, dt], [0, 1]]; B = [0, dt]'.
  double p11 = q_pos, p12 = 0.0, p22 = q_vel;
  for (int iter = 0; iter < 1000000; ++iter) {
    const double pa12 = p11 * dt + p12;
    const double pa22 = p12 * dt + p22;
    // B'PA and B'PB
    const double bpa1 = dt * p12, bpa2 = dt * pa22;
    const double s = r + dt * dt * p22;
    const double n11 = q_pos + p11 - bpa1 * bpa1 / s;
    const double n12 = pa12 - bpa1 * bpa2 / s;
    const double n22 = q_vel + dt * pa12 + pa22 - bpa2 * bpa2 / s;
    const double change = std::abs(n11 - p11) + std::abs(n12 - p12) + std::abs(n22 - p22);
    p11 = n11;
    p12 = n12;
    p22 = n22;
    if (change <= 1e-14 * (1.0 + std::abs(p11) + std::abs(p22))) break;
  }
  const double s = r + dt * dt * p22;
  return LqrGain{dt * p12 / s, dt * (p12 * dt + p22) / s};
}

OpponentPolicyConfig make_opponent_config(double dt, double q_pos, double q_vel, double r, std::array<double, 3> goal,
                                          double clamp) {
  require(clamp > 0.0, "opponent clamp must be positive");
  return OpponentPolicyConfig{solve_axis_lqr(dt, q_pos, q_vel, r), goal, clamp};
}

ControlVector opponent_lqr(const OpponentPolicyConfig& config, const StateVector& x_o) {
  require(x_o.size() == 6, "opponent_lqr: expects the 6-D opponent state");
  ControlVector u(3);
  const auto& k = kernels::active();
  const double* s = x_o.values().data();
  for (std::size_t a = 0; a < 3; ++a) {
    k.axis_feedback(s + 2 * a, s + 2 * a + 1, config.goal[a], config.gain.kp, config.gain.kd, -config.clamp,
                    config.clamp, 1, &u[a]);
  }
  return u;
}

namespace {

SystemSpec racing_spec(double dt, double bound) {
  SystemSpec s{"racing12", racing::kStateDim, racing::kControlDim, bound, dt, {}};
  for (std::size_t i = 0; i < 6; ++i) {
    s.state_units.push_back(Unit::meter);
    s.state_units.push_back(Unit::meter_per_second);
  }
  return s;
}

}  // namespace

RacingSystem::RacingSystem(double dt, double control_bound, OpponentPolicyConfig opponent)
    : System(racing_spec(dt, control_bound)), opponent_(opponent) {
  require(opponent_.clamp <= control_bound, "opponent clamp exceeds the control bound");
}

void RacingSystem::advance(double* x, const double* u, std::size_t count) const {
  const auto& k = kernels::active();
  const double dt = spec().dt;
  thread_local std::vector<double> scratch;
  if (scratch.size() < count) scratch.resize(count);
  for (std::size_t a = 0; a < 3; ++a) {
    double* p = x + (racing::kOpp + 2 * a) * count;
    double* v = x + (racing::kOpp + 2 * a + 1) * count;
    if (frozen_) {
      std::fill_n(scratch.begin(), count, 0.0);
    } else {
      k.axis_feedback(p, v, opponent_.goal[a], opponent_.gain.kp, opponent_.gain.kd, -opponent_.clamp,
                      opponent_.clamp, count, scratch.data());
    }
    k.integrate_axis(p, v, scratch.data(), count, dt);
  }
  for (std::size_t a = 0; a < 3; ++a) {
    k.integrate_axis(x + (2 * a) * count, x + (2 * a + 1) * count, u + a * count, count, dt);
  }
}

Trajectory rollout(const System& system, const StateVector& x0, const PolicyHandle& policy, std::size_t T) {
  require(T >= 1, "rollout: horizon must be >= 1");
  require(x0.size() == system.state_dim(), "rollout: state dimension mismatch");
  Trajectory traj;
  traj.dt = system.spec().dt;
  traj.states.reserve(T + 1);
  traj.controls.reserve(T);
  traj.states.push_back(x0);
  for (std::size_t t = 0; t < T; ++t) {
    ControlVector u = system.clamp(policy(traj.states.back()));
    traj.states.push_back(system.step(traj.states.back(), u));
    traj.controls.push_back(std::move(u));
  }
  return traj;
}

Trajectory rollout_open_loop(const System& system, const StateVector& x0, std::span<const ControlVector> controls) {
  require(x0.size() == system.state_dim(), "rollout_open_loop: state dimension mismatch");
  Trajectory traj;
  traj.dt = system.spec().dt;
  traj.states.reserve(controls.size() + 1);
  traj.states.push_back(x0);
  for (const auto& c : controls) {
    ControlVector u = system.clamp(c);
    traj.states.push_back(system.step(traj.states.back(), u));
    traj.controls.push_back(std::move(u));
  }
  return traj;
}

}  // namespace reachcert
