#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "reachcert/benchmarks.hpp"
#include "reachcert/systems.hpp"

using namespace reachcert;
using namespace reachcert::racing;

TEST_CASE("euler step of a one-axis double integrator") {
  DoubleIntegrator di(1, 0.1);
  const StateVector x1 = di.step(StateVector{0.0, 1.0}, ControlVector{1.0});
  CHECK(x1[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(x1[1] == doctest::Approx(1.1).epsilon(1e-15));
}

TEST_CASE("zero velocity and zero input leave positions unchanged") {
  DoubleIntegrator di(3, 0.05);
  const StateVector x{0.3, 0.0, -1.2, 0.0, 7.0, 0.0};
  CHECK(di.step(x, ControlVector(3, 0.0)) == x);
}

TEST_CASE("step rejects dimension mismatches") {
  DoubleIntegrator di(2, 0.1);
  CHECK_THROWS_AS(di.step(StateVector{0.0, 1.0}, ControlVector{0.0, 0.0}), ContractViolation);
  CHECK_THROWS_AS(di.step(StateVector(4), ControlVector{0.0}), ContractViolation);
}

TEST_CASE("axes of a double integrator are independent") {
  DoubleIntegrator di(3, 0.1);
  const StateVector x{0.1, 0.2, -0.3, 0.4, 0.5, -0.6};
  const ControlVector u{0.7, -0.2, 0.9};
  const StateVector y = di.step(x, u);
  DoubleIntegrator one(1, 0.1);
  for (std::size_t a = 0; a < 3; ++a) {
    const StateVector ya = one.step(StateVector{x[2 * a], x[2 * a + 1]}, ControlVector{u[a]});
    CHECK(y[2 * a] == ya[0]);
    CHECK(y[2 * a + 1] == ya[1]);
  }
}

TEST_CASE("batched advance matches single steps") {
  const RacingSetup setup;
  const auto sys = racing_system(setup);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  const std::size_t n = 13;
  StateBatch xb(kStateDim, n), ub(kControlDim, n);
  std::vector<StateVector> xs;
  std::vector<ControlVector> us;
  for (std::size_t k = 0; k < n; ++k) {
    StateVector x(kStateDim);
    ControlVector u(kControlDim);
    for (std::size_t i = 0; i < kStateDim; ++i) x[i] = 3.0 * d(rng);
    for (std::size_t i = 0; i < kControlDim; ++i) u[i] = d(rng);
    xb.set_column(k, x.span());
    ub.set_column(k, u.span());
    xs.push_back(x);
    us.push_back(u);
  }
  sys->step_batch(xb, ub);
  for (std::size_t k = 0; k < n; ++k) CHECK(xb.column(k) == sys->step(xs[k], us[k]).values());
}

TEST_CASE("control clamp is per axis") {
  DoubleIntegrator di(3, 0.1, 1.0);
  const ControlVector u = di.clamp(ControlVector{2.0, -0.5, -3.0});
  CHECK(u == ControlVector{1.0, -0.5, -1.0});
}

TEST_CASE("rollout shapes and a constant open-loop trajectory") {
  DoubleIntegrator di(2, 0.1);
  const StateVector x0(4, 0.0);
  std::vector<ControlVector> zeros(6, ControlVector(2, 0.0));
  const Trajectory t = rollout_open_loop(di, x0, zeros);
  REQUIRE(t.states.size() == 7);
  for (const auto& s : t.states) CHECK(s == x0);

  PolicyHandle p{"push", [](const StateVector&) { return ControlVector{5.0, -5.0}; }};
  const Trajectory c = rollout(di, x0, p, 4);
  CHECK(c.states.size() == 5);
  CHECK(c.controls.size() == 4);
  for (const auto& u : c.controls) CHECK(u == ControlVector{1.0, -1.0});
}

TEST_CASE("opponent LQR: fixed point at the goal and clamping") {
  const auto cfg = make_opponent_config(0.1, 1.0, 0.1, 0.01, {0.0, 2.0, 0.0}, 1.0);
  const ControlVector u0 = opponent_lqr(cfg, StateVector{0.0, 0.0, 2.0, 0.0, 0.0, 0.0});
  for (std::size_t a = 0; a < 3; ++a) CHECK(u0[a] == 0.0);

  OpponentPolicyConfig big = cfg;
  big.gain.kp *= 100.0;
  big.gain.kd *= 100.0;
  const ControlVector u = opponent_lqr(big, StateVector{0.5, 0.0, -3.0, 0.0, -0.2, 0.0});
  CHECK(u[0] == -1.0);
  CHECK(u[1] == 1.0);
  CHECK(u[2] == 1.0);
  CHECK_THROWS_AS(opponent_lqr(cfg, StateVector(12)), ContractViolation);
}

TEST_CASE("axis LQR gain matches a dense Riccati recursion") {
  for (const auto& [dt, q, qv, r] : {std::array<double, 4>{0.1, 1.0, 0.1, 0.01}, {0.05, 2.0, 0.5, 1.0},
                                     {0.2, 0.3, 0.0, 0.1}}) {
    Eigen::Matrix2d A;
    A << 1.0, dt, 0.0, 1.0;
    Eigen::Vector2d B(0.0, dt);
    Eigen::Matrix2d Q = Eigen::Vector2d(q, qv).asDiagonal();
    Eigen::Matrix2d P = Q;
    Eigen::RowVector2d K;
    for (int i = 0; i < 200000; ++i) {
      const double s = r + B.dot(P * B);
      K = (B.transpose() * P * A) / s;
      const Eigen::Matrix2d next = Q + A.transpose() * P * A - A.transpose() * P * B * K;
      if ((next - P).cwiseAbs().maxCoeff() < 1e-15) {
        P = next;
        break;
      }
      P = next;
    }
    const double s = r + B.dot(P * B);
    K = (B.transpose() * P * A) / s;
    const LqrGain g = solve_axis_lqr(dt, q, qv, r);
    CHECK(g.kp == doctest::Approx(K(0)).epsilon(1e-6));
    CHECK(g.kd == doctest::Approx(K(1)).epsilon(1e-6));
  }
}

TEST_CASE("racing dynamics: ego control, autonomous opponent, frozen opponent") {
  const RacingSetup setup;
  auto sys = racing_system(setup);
  StateVector x(kStateDim, 0.0);
  x[kOpp + kPy] = -3.0;
  x[kOpp + kVy] = 0.5;
  const ControlVector u{0.2, -0.4, 0.6};
  const StateVector y = sys->step(x, u);
  DoubleIntegrator ego(3, setup.dt);
  const StateVector ye = ego.step(StateVector{x[0], x[1], x[2], x[3], x[4], x[5]}, u);
  for (std::size_t i = 0; i < 6; ++i) CHECK(y[kEgo + i] == ye[i]);
  const ControlVector uo = opponent_lqr(sys->opponent(), StateVector{0.0, 0.0, -3.0, 0.5, 0.0, 0.0});
  CHECK(y[kOpp + kVy] == doctest::Approx(0.5 + setup.dt * uo[1]));

  sys->freeze_opponent(true);
  const StateVector f = sys->step(x, u);
  CHECK(f[kOpp + kPy] == doctest::Approx(-3.0 + 0.5 * setup.dt));
  CHECK(f[kOpp + kVy] == 0.5);
}

TEST_CASE("forward Euler converges at first order") {
  // Undamped unit oscillator p'' = -p from (1, 0); exact p(t) = cos t.
  const double T = 2.0;
  std::vector<double> errors;
  for (double dt : {0.02, 0.01, 0.005, 0.0025}) {
    LinearSystem sys({1.0, dt, -dt, 1.0}, {0.0, dt}, 2, 1, dt);
    StateVector x{1.0, 0.0};
    const auto steps = static_cast<std::size_t>(std::lround(T / dt));
    for (std::size_t i = 0; i < steps; ++i) x = sys.step(x, ControlVector{0.0});
    errors.push_back(std::hypot(x[0] - std::cos(T), x[1] + std::sin(T)));
  }
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double order = std::log2(errors[i - 1] / errors[i]);
    CHECK(order == doctest::Approx(1.0).epsilon(0.05));
  }
}
