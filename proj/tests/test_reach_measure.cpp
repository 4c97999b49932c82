#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "reachcert/reach_measure.hpp"
#include "reachcert/systems.hpp"

using namespace reachcert;
using namespace reachcert::racing;

namespace {

// Trajectory of 1-D states whose single coordinate indexes tabulated margins.
struct Tabulated {
  std::vector<double> r, c;
  RewardConstraintSpec spec(double gamma) const {
    RewardConstraintSpec s;
    auto rr = r;
    auto cc = c;
    s.reward = [rr](std::span<const double> x) { return rr[static_cast<std::size_t>(x[0])]; };
    s.constraint = [cc](std::span<const double> x) { return cc[static_cast<std::size_t>(x[0])]; };
    s.gamma = gamma;
    return s;
  }
  Trajectory traj() const {
    Trajectory t;
    for (std::size_t i = 0; i < r.size(); ++i) t.states.push_back(StateVector{static_cast<double>(i)});
    t.controls.assign(r.size() - 1, ControlVector{0.0});
    return t;
  }
};

StateVector racing_state() { return StateVector(kStateDim, 0.0); }

}  // namespace

TEST_CASE("t = 0 collapses to min(r, c)") {
  const Tabulated tab{{1.0, -1.0}, {2.0, 2.0}};
  CHECK(ra_measure(tab.spec(0.9), tab.traj(), 0) == 1.0);
}

TEST_CASE("an initial violation dominates every step") {
  const Tabulated tab{{5.0, 5.0, 5.0, 5.0}, {-1.0, 3.0, 3.0, 3.0}};
  const auto spec = tab.spec(0.9);
  for (std::size_t t = 0; t < 4; ++t) CHECK(ra_measure(spec, tab.traj(), t) <= -1.0);
  CHECK(rollout_value(spec, tab.traj()) < 0.0);
}

TEST_CASE("three-step measure matches direct enumeration") {
  const Tabulated tab{{-0.5, 0.2, 0.8, 0.4}, {1.0, 0.6, 0.1, 0.9}};
  const double g = 0.9;
  const auto spec = tab.spec(g);
  const auto traj = tab.traj();
  double best = -INFINITY;
  for (std::size_t t = 0; t <= 3; ++t) {
    double inner = INFINITY;
    for (std::size_t tau = 0; tau <= t; ++tau) inner = std::min(inner, std::pow(g, tau) * tab.c[tau]);
    const double expected = std::min(std::pow(g, t) * tab.r[t], inner);
    CHECK(ra_measure(spec, traj, t) == doctest::Approx(expected).epsilon(1e-14));
    best = std::max(best, expected);
  }
  CHECK(rollout_value(spec, traj) == doctest::Approx(best).epsilon(1e-14));
  // t = 2 has the largest reward, but its 0.1 constraint caps every later step, so t = 1 wins.
  CHECK(rollout_value(spec, traj) == doctest::Approx(0.9 * 0.2));
}

TEST_CASE("rollout value equals the brute-force max over random tables") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    Tabulated tab;
    const std::size_t n = 1 + rep % 9;
    for (std::size_t i = 0; i < n; ++i) {
      tab.r.push_back(d(rng));
      tab.c.push_back(d(rng));
    }
    const double g = 0.8 + 0.19 * (rep % 7) / 6.0;
    double best = -INFINITY;
    for (std::size_t t = 0; t < n; ++t) {
      double v = std::pow(g, t) * tab.r[t];
      for (std::size_t tau = 0; tau <= t; ++tau) v = std::min(v, std::pow(g, tau) * tab.c[tau]);
      best = std::max(best, v);
    }
    CHECK(rollout_value(tab.spec(g), tab.traj()) == doctest::Approx(best).epsilon(1e-13));
    CHECK(discounted_reach_avoid(tab.r, tab.c, g) == doctest::Approx(best).epsilon(1e-13));
  }
}

TEST_CASE("sign cases of the rollout value") {
  const Tabulated never{{-0.1, -0.2, -0.3}, {1.0, 1.0, 1.0}};
  CHECK(rollout_value(never.spec(0.99), never.traj()) < 0.0);
  const Tabulated start{{0.4, -1.0, -1.0}, {0.7, -5.0, -5.0}};
  CHECK(rollout_value(start.spec(0.99), start.traj()) == doctest::Approx(0.4));
}

TEST_CASE("racing reward: ego leading by (0.5, 0.5) at the gate center") {
  RacingSpec spec;
  StateVector x = racing_state();
  x[kOpp + kPy] = -0.5;
  x[kOpp + kVy] = -0.5;
  CHECK(racing_reward(spec, x.span()) == doctest::Approx(0.3));
}

TEST_CASE("racing downwash margin examples") {
  RacingSpec spec;
  StateVector x = racing_state();
  x[kOpp + kPx] = 0.5;
  CHECK(racing_downwash_margin(spec, x.span()) == doctest::Approx(0.05));
  x[kOpp + kPx] = 0.4;
  x[kOpp + kPz] = 1.0;
  CHECK(racing_downwash_margin(spec, x.span()) == doctest::Approx(-0.24));
  CHECK(racing_constraint(spec, x.span()) < 0.0);
  // An opponent below the ego does not widen the exclusion radius.
  x[kOpp + kPz] = -1.0;
  CHECK(racing_downwash_margin(spec, x.span()) == doctest::Approx(0.16 - 0.2));
}

TEST_CASE("racing gate walls and constraint cap") {
  RacingSpec spec;
  StateVector x = racing_state();
  x[kEgo + kPy] = -1.0;
  x[kOpp + kPx] = 5.0;
  CHECK(racing_gate_wall_margin(spec, x.span()) == doctest::Approx(1.05));
  CHECK(racing_constraint(spec, x.span()) == doctest::Approx(spec.constraint_cap));
  x[kEgo + kPx] = 1.2;
  CHECK(racing_gate_wall_margin(spec, x.span()) == doctest::Approx(-0.15));
  CHECK(racing_constraint(spec, x.span()) == doctest::Approx(-0.15));
}

TEST_CASE("lipschitz estimates") {
  const Box unit{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
  const double lin = lipschitz_estimate([](std::span<const double> x) { return x[0]; }, unit, 4000, 1);
  CHECK(lin <= 1.0 + 1e-12);
  CHECK(lin > 0.99);
  CHECK(lipschitz_estimate([](std::span<const double>) { return 3.0; }, unit, 1000, 2) == 0.0);

  // min of affine margins: bounded by the largest gradient row norm.
  const auto fmin = [](std::span<const double> x) { return std::min(2.0 * x[0] - x[1], 0.5 * x[2] + 0.2); };
  CHECK(lipschitz_estimate(fmin, unit, 4000, 3) <= std::sqrt(5.0) + 1e-12);

  RacingSpec spec;
  spec.operating_box.lo.assign(kStateDim, -1.0);
  spec.operating_box.hi.assign(kStateDim, 1.0);
  const auto rc = racing_reward_constraint(spec, 0.99);
  CHECK(lipschitz_estimate(rc.reward, spec.operating_box, 4000, 4) <= rc.lipschitz_reward + 1e-12);
  CHECK(lipschitz_estimate(rc.constraint, spec.operating_box, 4000, 5) <= rc.lipschitz_constraint + 1e-12);
}

TEST_CASE("spec validation") {
  RewardConstraintSpec s;
  CHECK_THROWS_AS(s.validate(), ContractViolation);
  s.reward = [](std::span<const double>) { return 0.0; };
  s.constraint = s.reward;
  s.gamma = 1.0;
  CHECK_THROWS_AS(s.validate(), ContractViolation);
  s.gamma = 0.9;
  s.lipschitz_reward = -1.0;
  CHECK_THROWS_AS(s.validate(), ContractViolation);
}
