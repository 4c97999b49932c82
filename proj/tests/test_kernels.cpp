#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <random>

#include "reachcert/benchmarks.hpp"
#include "reachcert/controllers.hpp"
#include "reachcert/kernels.hpp"

using namespace reachcert;
using namespace reachcert::kernels;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// Runs every kernel of `t` on fixed inputs and concatenates the outputs.
std::vector<double> exercise(const Table& t, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> out;
  auto pos = random_vec(rng, n), vel = random_vec(rng, n), acc = random_vec(rng, n);
  t.integrate_axis(pos.data(), vel.data(), acc.data(), n, 0.1);
  out.insert(out.end(), pos.begin(), pos.end());
  out.insert(out.end(), vel.begin(), vel.end());

  auto c = random_vec(rng, n, -3.0, 3.0);
  t.clamp(c.data(), n, -1.0, 1.0);
  out.insert(out.end(), c.begin(), c.end());

  std::vector<double> fb(n);
  t.axis_feedback(pos.data(), vel.data(), 0.3, 1.7, 0.9, -1.0, 1.0, n, fb.data());
  out.insert(out.end(), fb.begin(), fb.end());

  const std::size_t dim = 5;
  const auto pts = random_vec(rng, n * dim), q = random_vec(rng, dim), other = random_vec(rng, n * dim);
  std::vector<double> sd(n), pd(n);
  t.squared_distances(pts.data(), n, n, dim, q.data(), sd.data());
  t.pair_distances(pts.data(), other.data(), n, n, dim, pd.data());
  out.insert(out.end(), sd.begin(), sd.end());
  out.insert(out.end(), pd.begin(), pd.end());

  if (n > 0) out.push_back(t.max_value(c.data(), n));
  auto acc2 = random_vec(rng, n);
  t.min_inplace(acc2.data(), pos.data(), n);
  out.insert(out.end(), acc2.begin(), acc2.end());

  const std::size_t k = 7;
  const auto w = random_vec(rng, k, 0.0, 1.0), rows = random_vec(rng, k * n);
  std::vector<double> ws(n);
  t.weighted_row_sum(w.data(), rows.data(), k, n, ws.data());
  out.insert(out.end(), ws.begin(), ws.end());

  const auto ex = random_vec(rng, n), ey = random_vec(rng, n), ez = random_vec(rng, n);
  const auto ox = random_vec(rng, n), oy = random_vec(rng, n), oz = random_vec(rng, n);
  std::vector<double> dw(n), gw(n), lc(n);
  t.downwash_margin(ex.data(), ey.data(), ez.data(), ox.data(), oy.data(), oz.data(), n, 0.2, dw.data());
  t.gate_wall_margin(ex.data(), ey.data(), ez.data(), n, 0.05, gw.data());
  t.lead_corridor_margin(ex.data(), ey.data(), vel.data(), ez.data(), oy.data(), acc.data(), n, 0.3, 0.0, 0.0,
                         lc.data());
  out.insert(out.end(), dw.begin(), dw.end());
  out.insert(out.end(), gw.begin(), gw.end());
  out.insert(out.end(), lc.begin(), lc.end());
  return out;
}

}  // namespace

TEST_CASE("scalar backend is always available") {
  CHECK(is_available(Backend::scalar));
  const auto all = available_backends();
  CHECK(std::find(all.begin(), all.end(), Backend::scalar) != all.end());
  Backend b;
  CHECK(parse_backend("avx2", b));
  CHECK(b == Backend::avx2);
  CHECK_FALSE(parse_backend("sse", b));
  CHECK(std::string(backend_name(Backend::neon)) == "neon");
}

TEST_CASE("every available backend is bitwise identical to scalar") {
  const Table& ref = table(Backend::scalar);
  for (Backend b : available_backends()) {
    const Table& t = table(b);
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 16u, 31u, 64u, 257u}) {
      for (std::uint64_t seed : {1u, 2u, 3u}) {
        CHECK_MESSAGE(same_bits(exercise(ref, n, seed), exercise(t, n, seed)), backend_name(b), " n=", n);
      }
    }
  }
}

TEST_CASE("scalar kernels match their element formulas") {
  const Table& t = table(Backend::scalar);
  double p = 1.0, v = 2.0, a = -1.0;
  t.integrate_axis(&p, &v, &a, 1, 0.1);
  CHECK(p == 1.2);
  CHECK(v == 1.9);
  double dw;
  const double ex = 0.0, ey = 0.0, ez = 0.0, ox = 0.4, oy = 0.0, oz = 1.0;
  t.downwash_margin(&ex, &ey, &ez, &ox, &oy, &oz, 1, 0.2, &dw);
  CHECK(dw == doctest::Approx(-0.24));
  const std::vector<double> vals{1.0, 5.0, -2.0, 3.0};
  CHECK(t.max_value(vals.data(), vals.size()) == 5.0);
}

TEST_CASE("end-to-end results do not depend on the backend") {
  const RacingSetup setup;
  const auto sys = racing_system(setup);
  const auto pol = racing_policy(setup);
  StateVector x0(racing::kStateDim);
  x0[racing::kEgo + racing::kPx] = 0.6;
  x0[racing::kEgo + racing::kPy] = -5.2;
  x0[racing::kEgo + racing::kVy] = 1.6;
  x0[racing::kOpp + racing::kPy] = -4.8;
  x0[racing::kOpp + racing::kVy] = 0.4;
  std::vector<Trajectory> runs;
  std::vector<double> costs;
  for (Backend b : available_backends()) {
    ScopedBackend scope(b);
    CHECK(active_backend() == b);
    runs.push_back(rollout(*sys, x0, pol, 60));
    RacingCost cost(RacingCostKind::fast_goal, setup.spec, RacingCostConfig{});
    MPPIConfig cfg;
    cfg.samples = 37;
    costs.push_back(mppi_step(cfg, cost, *sys, x0, {}, 11).control[0]);
  }
  for (std::size_t i = 1; i < runs.size(); ++i) {
    for (std::size_t t = 0; t < runs[0].states.size(); ++t) CHECK(same_bits(runs[i].states[t].values(), runs[0].states[t].values()));
    CHECK(same_bits(costs[i], costs[0]));
  }
}

TEST_CASE("selecting an unavailable backend throws") {
  for (Backend b : {Backend::avx2, Backend::neon}) {
    if (!is_available(b)) CHECK_THROWS_AS(table(b), ContractViolation);
  }
}
