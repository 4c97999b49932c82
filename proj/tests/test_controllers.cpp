#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "reachcert/benchmarks.hpp"
#include "reachcert/controllers.hpp"

using namespace reachcert;
using namespace reachcert::racing;

namespace {

// sum_t (p_t - goal)^2 + 0.1 u_t^2 on a one-axis double integrator.
class QuadraticCost final : public RolloutCost {
 public:
  explicit QuadraticCost(double goal) : goal_(goal) {}
  void running(std::size_t, const StateBatch& x, const StateBatch& u, double* cost) override {
    for (std::size_t k = 0; k < x.count(); ++k) {
      cost[k] += (x.at(0, k) - goal_) * (x.at(0, k) - goal_) + 0.1 * u.at(0, k) * u.at(0, k);
    }
  }

 private:
  double goal_;
};

StateVector joint(std::array<double, 6> ego, std::array<double, 6> opp) {
  StateVector x(kStateDim);
  for (std::size_t i = 0; i < 6; ++i) {
    x[kEgo + i] = ego[i];
    x[kOpp + i] = opp[i];
  }
  return x;
}

GlobalCertificate racing_cert(const std::vector<std::vector<double>>& pts, double eps) {
  GlobalCertificate c;
  c.eps_x = eps;
  c.kind = CoveringKind::halton;
  c.spacing = eps;
  c.domain = Box{std::vector<double>(8, -100.0), std::vector<double>(8, 100.0)};
  c.embedding = racing_embedding();
  for (const auto& p : pts) c.records.push_back({p, 0.1, false});
  c.finalize();
  return c;
}

}  // namespace

TEST_CASE("surrogate is at rest on its waypoint") {
  const RacingSetup s;
  const auto pol = racing_policy(s);
  // Well ahead of the opponent, on the centerline, at the desired speed.
  const StateVector x = joint({0.0, 0.0, -2.0, 2.0, 0.0, 0.0}, {0.0, 0.0, -6.0, 1.0, 0.0, 0.0});
  const ControlVector u = pol(x);
  CHECK(max_abs(u.span()) < 1e-6);
}

TEST_CASE("surrogate repulsion pushes away from the opponent") {
  RacingSetup s;
  s.surrogate.kp = s.surrogate.kd = s.surrogate.kv = 0.0;
  s.surrogate.side_offset = 0.0;
  const auto pol = racing_policy(s);
  s.surrogate.repulse_gain = 0.0;
  const auto base = racing_policy(s);
  for (double side : {-1.0, 1.0}) {
    // Opponent 0.5 m above and 0.1 m to the side: margin 0.01 - 0.3 < activation.
    const StateVector x = joint({0.1 * side, 0.0, -3.0, 1.0, 0.0, 0.0}, {0.0, 0.0, -3.0, 1.0, 0.5, 0.0});
    const double du = pol(x)[0] - base(x)[0];
    CHECK(du * side > 0.0);
  }
}

TEST_CASE("surrogate reaches the target from mid-corridor with the opponent far away") {
  const RacingSetup s;
  const auto sys = racing_system(s);
  const auto pol = racing_policy(s);
  const StateVector x0 = joint({0.0, 0.0, -2.0, 1.5, 0.0, 0.0}, {0.0, 0.0, -100.0, 0.0, 0.0, 0.0});
  const Trajectory t = rollout(*sys, x0, pol, 40);
  bool reached = false;
  for (const auto& x : t.states) {
    CHECK(racing_episode_margin(s.spec, x.span()) > 0.0);
    if (racing_reward(s.spec, x.span()) > 0.0) reached = true;
  }
  CHECK(reached);
  for (const auto& u : t.controls) CHECK(max_abs(u.span()) <= 1.0);
}

TEST_CASE("quantized PD snaps to the nearest level") {
  const auto p = make_quantized_pd(1.0, 1.0, 1.0, {-1.0, 0.0, 1.0});
  CHECK(p(StateVector{1.0, 0.0})[0] == 0.0);
  CHECK(p(StateVector{-2.0, 0.0})[0] == 1.0);
  CHECK(p(StateVector{1.0, 0.4})[0] == 0.0);
  CHECK(p(StateVector{1.0, 0.6})[0] == -1.0);
}

TEST_CASE("softmax weights: normalization, shift invariance, argmin limit") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(0.0, 50.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> c(64);
    for (auto& v : c) v = d(rng);
    for (double lambda : {0.1, 1.0, 10.0}) {
      const auto w = softmax_weights(c, lambda);
      CHECK(std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) <= 1e-12);
      auto shifted = c;
      for (auto& v : shifted) v += 1234.5;
      const auto ws = softmax_weights(shifted, lambda);
      for (std::size_t k = 0; k < w.size(); ++k) CHECK(std::abs(w[k] - ws[k]) <= 1e-12);
    }
  }
  const std::vector<double> c{3.0, 1.0, 2.0, 1.0};
  const auto w = softmax_weights(c, 1e-12);
  CHECK(w == std::vector<double>{0.0, 1.0, 0.0, 0.0});
  const std::vector<double> bad{INFINITY, 2.0, NAN};
  CHECK(softmax_weights(bad, 1.0) == std::vector<double>{0.0, 1.0, 0.0});
  CHECK_THROWS_AS(softmax_weights(std::vector<double>{NAN, INFINITY}, 1.0), ContractViolation);
}

TEST_CASE("mppi: argmin limit returns the best sampled sequence") {
  DoubleIntegrator sys(1, 0.1);
  QuadraticCost cost(1.0);
  MPPIConfig cfg;
  cfg.horizon = 15;
  cfg.samples = 128;
  cfg.lambda = 1e-12;
  cfg.sigma = {0.5};
  const auto r = mppi_step(cfg, cost, sys, StateVector{0.0, 0.0}, {}, 17);
  const double best = *std::min_element(r.costs.begin(), r.costs.end());
  CHECK(sequence_cost(cost, sys, StateVector{0.0, 0.0}, r.sequence) == best);
  CHECK(r.control == r.sequence.front());
}

TEST_CASE("mppi: zero noise returns the warm start") {
  DoubleIntegrator sys(1, 0.1);
  QuadraticCost cost(1.0);
  MPPIConfig cfg;
  cfg.horizon = 5;
  cfg.samples = 16;
  cfg.sigma = {0.0};
  ControlSequence warm;
  for (int i = 0; i < 5; ++i) warm.push_back(ControlVector{0.1 * i - 0.2});
  warm[0] = ControlVector{0.35};
  const auto r = mppi_step(cfg, cost, sys, StateVector{0.0, 0.0}, warm, 3);
  CHECK(r.control[0] == doctest::Approx(0.35).epsilon(1e-14));
  for (std::size_t t = 0; t < 5; ++t) CHECK(r.sequence[t][0] == doctest::Approx(warm[t][0]).epsilon(1e-14));
}

TEST_CASE("mppi: improves on the zero sequence and stays in bounds") {
  DoubleIntegrator sys(1, 0.1);
  QuadraticCost cost(1.0);
  MPPIConfig cfg;
  cfg.horizon = 20;
  cfg.samples = 256;
  cfg.lambda = 0.5;
  cfg.sigma = {0.6};
  ControlSequence seq;
  const StateVector x{0.0, 0.0};
  const double start = sequence_cost(cost, sys, x, ControlSequence(20, ControlVector{0.0}));
  for (int it = 0; it < 10; ++it) seq = mppi_step(cfg, cost, sys, x, seq, 100 + it).sequence;
  CHECK(sequence_cost(cost, sys, x, seq) < start);
  for (const auto& u : seq) CHECK(std::abs(u[0]) <= 1.0);
  const auto a = mppi_step(cfg, cost, sys, x, seq, 5);
  const auto b = mppi_step(cfg, cost, sys, x, seq, 5);
  CHECK(a.control == b.control);
}

TEST_CASE("mppi input validation") {
  DoubleIntegrator sys(1, 0.1);
  QuadraticCost cost(0.0);
  MPPIConfig cfg;
  cfg.horizon = 4;
  CHECK_THROWS_AS(mppi_step(cfg, cost, sys, StateVector{0.0, 0.0}, ControlSequence(3, ControlVector{0.0}), 1),
                  ContractViolation);
  cfg.sigma = {0.1, 0.2};
  CHECK_THROWS_AS(mppi_step(cfg, cost, sys, StateVector{0.0, 0.0}, {}, 1), ContractViolation);
}

TEST_CASE("shift sequence repeats the tail") {
  const ControlSequence s{ControlVector{1.0}, ControlVector{2.0}, ControlVector{3.0}};
  CHECK(shift_sequence(s) == ControlSequence{ControlVector{2.0}, ControlVector{3.0}, ControlVector{3.0}});
  CHECK(shift_sequence({}).empty());
}

TEST_CASE("recovery cost: zero inside, distance for a single state") {
  const RacingSpec spec;
  const RacingCostConfig cfg;
  const StateVector inside = joint({0.0, 0.0, 0.5, 2.0, 0.0, 0.0}, {0.0, 0.0, -50.0, 0.0, 0.0, 0.0});
  const auto cert = racing_cert({{0.0, 0.0, 0.5, 2.0, 0.0, 0.0, -50.0, 0.0}}, 0.1);
  Trajectory t;
  t.states = {inside, inside};
  CHECK(recovery_cost(&cert, {}, t, spec, cfg) == 0.0);

  StateVector far = inside;
  far[kEgo + kPx] = 0.7;
  t.states = {far};
  CHECK(recovery_cost(&cert, {}, t, spec, cfg) == doctest::Approx(0.6).epsilon(1e-12));

  LocalCertificate lc;
  lc.center = StateVector{0.7, 0.0, 0.5, 2.0, 0.0, 0.0, -50.0, 0.0};
  lc.radius = 0.05;
  lc.embedding = racing_embedding();
  CHECK(recovery_cost(&cert, {lc}, t, spec, cfg) == 0.0);
  far[kEgo + kPx] = 0.8;
  CHECK(certified_distance(nullptr, {lc}, far.span()) == doctest::Approx(0.05));

  const GlobalCertificate empty = racing_cert({}, 0.1);
  CHECK_THROWS_AS(recovery_cost(&empty, {}, t, spec, cfg), ContractViolation);
}

TEST_CASE("recovery cost gradient points away from the nearest certified ball") {
  const RacingSpec spec;
  const RacingCostConfig cfg;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 6; ++i) pts.push_back({d(rng), d(rng), 1.0 + d(rng), 2.0 + d(rng), d(rng), 0.0, -50.0, 0.0});
  const auto cert = racing_cert(pts, 0.1);
  const double h = 1e-6;
  int checked = 0;
  for (int q = 0; q < 100; ++q) {
    // Ego past the gate plane so only the (distant) downwash term could add a barrier.
    StateVector x = joint({1.5 * d(rng), d(rng), 1.0 + 0.9 * d(rng), 2.0 + d(rng), 0.2 * d(rng), 0.1 * d(rng)},
                          {1.2 * d(rng), 0.0, -50.0, 0.0, 0.0, 0.0});
    Trajectory t;
    t.states = {x};
    if (recovery_cost(&cert, {}, t, spec, cfg) <= 1e-3) continue;
    // Nearest certified nominal by direct scan.
    double best = INFINITY;
    StateVector c;
    for (const auto& p : pts) {
      const StateVector lifted = cert.embedding.lift(p);
      const double dist = distance2(lifted.span(), x.span());
      if (dist < best) {
        best = dist;
        c = lifted;
      }
    }
    std::vector<double> grad(kStateDim);
    for (std::size_t i = 0; i < kStateDim; ++i) {
      StateVector xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      t.states = {xp};
      const double fp = recovery_cost(&cert, {}, t, spec, cfg);
      t.states = {xm};
      grad[i] = (fp - recovery_cost(&cert, {}, t, spec, cfg)) / (2.0 * h);
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < kStateDim; ++i) dot += grad[i] * (x[i] - c[i]) / best;
    CHECK(dot == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(norm2(grad) == doctest::Approx(1.0).epsilon(1e-5));
    ++checked;
  }
  CHECK(checked >= 90);
}

TEST_CASE("cbf: inactive constraint leaves the nominal control") {
  const RacingSetup s;
  const auto opp = racing_opponent(s);
  const StateVector x = joint({0.0, 0.0, 0.5, 2.0, 0.0, 0.0}, {0.0, 0.0, -5.0, 1.0, 0.0, 0.0});
  bool ok = false;
  const ControlVector u = cbf_filter(s.cbf, s.spec, opp, x, ControlVector{0.3, -0.2, 0.1}, 1.0, &ok);
  CHECK(ok);
  CHECK(u == ControlVector{0.3, -0.2, 0.1});
  // Nominal controls outside the box are clamped first.
  const ControlVector c = cbf_filter(s.cbf, s.spec, opp, x, ControlVector{3.0, -0.2, -7.0}, 1.0);
  CHECK(c == ControlVector{1.0, -0.2, -1.0});
}

TEST_CASE("cbf: output stays in the box, infeasible falls back to a vertex") {
  const RacingSetup s;
  const auto opp = racing_opponent(s);
  // Ego rushing into the opponent from directly below.
  const StateVector x = joint({0.0, 0.0, -3.0, 3.0, -0.3, 0.0}, {0.0, 0.0, -2.9, 0.0, 0.0, 0.0});
  bool ok = true;
  const ControlVector u = cbf_filter(s.cbf, s.spec, opp, x, ControlVector{0.0, 1.0, 0.0}, 1.0, &ok);
  CHECK(max_abs(u.span()) <= 1.0);
  if (!ok) {
    const auto rows = cbf_constraints(s.cbf, s.spec, opp, x, ControlVector{0.0, 1.0, 0.0});
    for (std::size_t i = 0; i < 3; ++i) CHECK(u[i] == (rows[0].a[i] >= 0.0 ? 1.0 : -1.0));
  }
}

TEST_CASE("cbf quadratic program agrees with a 41^3 grid search") {
  const RacingSetup s;
  const auto opp = racing_opponent(s);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  const int n = 41;
  const double step = 2.0 / (n - 1);
  int active_cases = 0;
  for (int rep = 0; rep < 300 && active_cases < 40; ++rep) {
    const StateVector x = joint({0.4 * d(rng), 0.5 * d(rng), -1.0 + 0.3 * d(rng), 1.5 + 0.5 * d(rng), 0.3 * d(rng), 0.0},
                                {0.3 * d(rng), 0.0, -0.8 + 0.3 * d(rng), 1.0, 0.3 * d(rng), 0.0});
    const ControlVector nom{d(rng), d(rng), d(rng)};
    const auto rows = cbf_constraints(s.cbf, s.spec, opp, x, nom);
    const auto qp = solve_box_qp({nom[0], nom[1], nom[2]}, rows, 1.0);
    auto slack = [&](const LinearConstraint& c, const std::array<double, 3>& u) {
      return c.a[0] * u[0] + c.a[1] * u[1] + c.a[2] * u[2] - c.b;
    };
    std::array<double, 3> grid_best{};
    double grid_obj = INFINITY;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          const std::array<double, 3> u{-1.0 + i * step, -1.0 + j * step, -1.0 + k * step};
          bool feasible = true;
          for (const auto& c : rows) feasible = feasible && slack(c, u) >= 0.0;
          if (!feasible) continue;
          const double obj = (u[0] - nom[0]) * (u[0] - nom[0]) + (u[1] - nom[1]) * (u[1] - nom[1]) +
                             (u[2] - nom[2]) * (u[2] - nom[2]);
          if (obj < grid_obj) {
            grid_obj = obj;
            grid_best = u;
          }
        }
      }
    }
    if (!std::isfinite(grid_obj)) continue;  // no feasible grid point: nothing to compare
    REQUIRE(qp.feasible);
    const double qp_obj = (qp.u[0] - nom[0]) * (qp.u[0] - nom[0]) + (qp.u[1] - nom[1]) * (qp.u[1] - nom[1]) +
                          (qp.u[2] - nom[2]) * (qp.u[2] - nom[2]);
    CHECK(qp_obj <= grid_obj + 1e-12);
    bool any_active = false;
    for (const auto& c : rows) {
      CHECK(slack(c, qp.u) >= -1e-8);
      const double an = std::sqrt(c.a[0] * c.a[0] + c.a[1] * c.a[1] + c.a[2] * c.a[2]);
      if (std::abs(slack(c, qp.u)) < 1e-8 && an > 0.0) {
        any_active = true;
        // The grid optimum lies within grid resolution of each active face.
        CHECK(slack(c, grid_best) / an <= std::sqrt(3.0) * step + 1e-12);
      }
    }
    // Strong convexity over a convex feasible set: |u_grid - u_qp|^2 <= obj(u_grid) - obj(u_qp).
    double gap2 = 0.0;
    for (int a = 0; a < 3; ++a) gap2 += (qp.u[a] - grid_best[a]) * (qp.u[a] - grid_best[a]);
    CHECK(gap2 <= grid_obj - qp_obj + 1e-12);
    if (any_active) ++active_cases;
  }
  CHECK(active_cases >= 10);
}
