#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>
#include <sstream>

#include "reachcert/benchmarks.hpp"
#include "reachcert/hierarchy.hpp"

using namespace reachcert;
using namespace reachcert::racing;

namespace {

StateVector joint(std::array<double, 6> ego, std::array<double, 6> opp) {
  StateVector x(kStateDim);
  for (std::size_t i = 0; i < 6; ++i) {
    x[kEgo + i] = ego[i];
    x[kOpp + i] = opp[i];
  }
  return x;
}

struct Fixture {
  RacingSetup setup;
  std::unique_ptr<RacingSystem> system;
  PolicyHandle policy;
  RewardConstraintSpec rc;

  Fixture() {
    for (MPPIConfig* m : {&setup.hierarchy.fast, &setup.hierarchy.recovery, &setup.hierarchy.ablation}) {
      m->samples = 64;
      m->horizon = 12;
    }
    system = racing_system(setup);
    policy = racing_policy(setup);
    rc = racing_spec(setup);
  }

  GlobalCertificate cert(std::vector<CertificateRecord> records) const {
    GlobalCertificate c;
    c.policy_id = policy.id;
    c.eps_x = 0.1;
    c.kind = CoveringKind::halton;
    c.spacing = 0.2;
    c.domain = Box{std::vector<double>(8, -200.0), std::vector<double>(8, 200.0)};
    c.embedding = racing_embedding();
    c.records = std::move(records);
    c.finalize();
    return c;
  }

  HierarchicalController controller(const GlobalCertificate& c, HierarchyConfig h) const {
    return HierarchicalController(*system, setup.spec, rc, policy, c, std::move(h));
  }
};

std::vector<double> reduced(const StateVector& x) { return racing_embedding().reduce(x.span()); }

}  // namespace

TEST_CASE("tier 0 inside the target regardless of the certificate") {
  Fixture f;
  const StateVector x = joint({0.0, 0.0, -0.5, 2.0, 0.0, 0.0}, {0.0, 0.0, -1.5, 1.0, 0.0, 0.0});
  REQUIRE(racing_reward(f.setup.spec, x.span()) > 0.0);
  for (const auto& c : {f.cert({}), f.cert({{reduced(x), 0.2, true}})}) {
    auto h = f.controller(c, f.setup.hierarchy);
    const TierDecision d = h.act(x, 0);
    CHECK(d.tier == Tier::target);
    CHECK(max_abs(d.control.span()) <= 1.0);
    CHECK_FALSE(d.local.has_value());
  }
}

TEST_CASE("tier 1 at a certified nominal applies the policy") {
  Fixture f;
  const StateVector x = joint({0.5, 0.0, -4.0, 1.5, 0.0, 0.0}, {0.0, 0.0, -3.5, 0.5, 0.0, 0.0});
  REQUIRE(racing_reward(f.setup.spec, x.span()) <= 0.0);
  const auto c = f.cert({{reduced(x), 0.05, false}});
  auto h = f.controller(c, f.setup.hierarchy);
  const TierDecision d = h.act(x, 0);
  CHECK(d.tier == Tier::global);
  CHECK(d.diag.in_global);
  CHECK(d.control == f.system->clamp(f.policy(x)));
}

TEST_CASE("no certified region and no refinement falls through to tier 3") {
  Fixture f;
  const StateVector x = joint({0.5, 0.0, -4.0, 1.5, 0.0, 0.0}, {0.0, 0.0, -3.5, 0.5, 0.0, 0.0});
  const auto empty = f.cert({});
  for (bool refine : {true, false}) {
    HierarchyConfig hc = f.setup.hierarchy;
    hc.refine_enabled = refine;
    auto h = f.controller(empty, hc);
    const EpisodeLog log = run_episode(h, *f.system, f.setup.spec, x, 5);
    REQUIRE(log.steps.size() == 5);
    for (const auto& s : log.steps) {
      CHECK(s.decision.tier == Tier::recovery);
      CHECK_FALSE(s.decision.diag.refine_attempted);
    }
  }
  // A failed refinement is recorded and not retried while the context holds.
  HierarchyConfig hc = f.setup.hierarchy;
  hc.refine.max_iterations = 1;
  hc.refine.r_max = 1.0;
  const StateVector bad = joint({0.0, 0.0, -4.0, 1.5, 0.0, 0.0}, {0.0, 0.0, -3.8, 1.4, 0.3, 0.0});
  const auto c = f.cert({{reduced(bad), 0.01, true}});
  auto h = f.controller(c, hc);
  StateVector probe = bad;
  probe[kEgo + kPx] = 0.3;
  const TierDecision d0 = h.act(probe, 0);
  CHECK(d0.diag.refine_attempted);
  REQUIRE(d0.diag.refine_status.has_value());
  CHECK(*d0.diag.refine_status != RefineStatus::success);
  CHECK(d0.tier == Tier::recovery);
  const TierDecision d1 = h.act(probe, 1);
  CHECK_FALSE(d1.diag.refine_attempted);
  CHECK(d1.tier == Tier::recovery);
}

TEST_CASE("tier 2 refines near a boundary point and binds the policy") {
  Fixture f;
  HierarchyConfig hc = f.setup.hierarchy;
  hc.refine.r_max = 0.3;
  // The ego leads; `off` sits just outside the corridor, so it is not in the target yet.
  const StateVector boundary = joint({0.2, 0.0, -2.0, 1.5, 0.0, 0.0}, {-0.3, 0.0, -3.0, 1.0, 0.0, 0.0});
  auto off = boundary;
  off[kEgo + kPx] = 0.35;
  const auto c2 = f.cert({{reduced(boundary), 0.01, true}});
  auto h2 = f.controller(c2, hc);
  REQUIRE(racing_reward(f.setup.spec, off.span()) <= 0.0);
  const TierDecision d = h2.act(off, 0);
  REQUIRE(d.diag.refine_attempted);
  REQUIRE(d.diag.refine_status == RefineStatus::success);
  CHECK(d.tier == Tier::local);
  REQUIRE(d.local.has_value());
  CHECK(d.local->policy_id == f.policy.id);
  CHECK(local_member(*d.local, off, f.policy.id));
  CHECK(d.control == f.system->clamp(f.policy(off)));
  CHECK(h2.cache().size() == 1);
  // The next step reuses the cached ball.
  const TierDecision again = h2.act(off, 1);
  CHECK(again.tier == Tier::local);
  CHECK(again.diag.cache_hit);
  CHECK_FALSE(again.diag.refine_attempted);
}

TEST_CASE("opponent far behind: success through tiers 0 and 1 only") {
  Fixture f;
  const RacingSetup defaults;
  const auto sys = racing_system(defaults);
  const StateVector x0 = joint({0.0, 0.0, -2.0, 1.5, 0.0, 0.0}, {0.0, 0.0, -100.0, 0.0, 0.0, 0.0});
  const auto c = f.cert({{reduced(x0), 0.05, false}});
  HierarchicalController h(*sys, defaults.spec, racing_spec(defaults), f.policy, c, defaults.hierarchy);
  h.reset(5);
  const EpisodeLog log = run_episode(h, *sys, defaults.spec, x0, defaults.episode_steps);
  CHECK(log.outcome == Outcome::success);
  CHECK(log.tier_histogram[2] == 0);
  CHECK(log.tier_histogram[3] == 0);
  CHECK(log.tier_histogram[0] + log.tier_histogram[1] == log.steps.size());
  REQUIRE(log.ego_cross.has_value());
  CHECK_FALSE(log.opponent_cross.has_value());
}

TEST_CASE("initial violation ends the episode at step 0") {
  Fixture f;
  const StateVector x0 = joint({0.0, 0.0, -3.0, 1.0, 0.0, 0.0}, {0.2, 0.0, -3.0, 1.0, 1.0, 0.0});
  const auto c = f.cert({});
  auto h = f.controller(c, f.setup.hierarchy);
  const EpisodeLog log = run_episode(h, *f.system, f.setup.spec, x0, 100);
  CHECK(log.outcome == Outcome::collision);
  CHECK(log.steps.empty());
  CHECK(log.final_state == x0);
}

TEST_CASE("episode termination: lost, timeout and crossing outside the corridor") {
  Fixture f;
  class Fixed final : public Controller {
   public:
    explicit Fixed(ControlVector u) : u_(std::move(u)) {}
    std::string name() const override { return "fixed"; }
    void reset(std::uint64_t) override {}
    TierDecision act(const StateVector&, std::size_t) override { return {Tier::none, u_, {}, {}}; }

   private:
    ControlVector u_;
  };
  Fixed stay(ControlVector{0.0, 0.0, 0.0});
  // Opponent one step from the gate, ego far back: the opponent wins.
  const StateVector lost0 = joint({0.6, 0.0, -4.0, 0.0, 0.0, 0.0}, {0.0, 0.0, -0.05, 1.0, 0.0, 0.0});
  const EpisodeLog lost = run_episode(stay, *f.system, f.setup.spec, lost0, 50);
  CHECK(lost.outcome == Outcome::lost);
  CHECK(lost.opponent_cross == std::optional<std::size_t>(0));

  const StateVector slow = joint({0.0, 0.0, -4.0, 0.0, 0.0, 0.0}, {0.0, 0.0, -40.0, 0.0, 0.0, 0.0});
  const EpisodeLog timeout = run_episode(stay, *f.system, f.setup.spec, slow, 3);
  CHECK(timeout.outcome == Outcome::timeout);
  CHECK(timeout.steps.size() == 3);

  // Oversized controls are clamped before they are logged and applied.
  Fixed push(ControlVector{5.0, 5.0, 0.0});
  const EpisodeLog clamped = run_episode(push, *f.system, f.setup.spec, slow, 2);
  for (const auto& s : clamped.steps) CHECK(s.decision.control == ControlVector{1.0, 1.0, 0.0});

  // Crossing the gate plane beside the corridor: interpolated p_x = 0.37 at p_y = 0.
  const StateVector wide = joint({0.12, 5.0, -0.1, 2.0, 0.0, 0.0}, {0.0, 0.0, -40.0, 0.0, 0.0, 0.0});
  const EpisodeLog w = run_episode(stay, *f.system, f.setup.spec, wide, 5);
  CHECK(w.outcome == Outcome::collision);
}

TEST_CASE("every tier decision replays with all lower tiers false") {
  Fixture f;
  HierarchyConfig hc = f.setup.hierarchy;
  hc.refine.r_max = 0.3;
  const StateVector x0 = joint({0.5, 0.0, -4.0, 1.6, 0.0, 0.0}, {0.0, 0.0, -3.8, 0.5, 0.0, 0.0});
  std::vector<CertificateRecord> recs;
  // A short chain of certified nominals along the approach.
  for (int i = 0; i < 10; ++i) {
    StateVector x = x0;
    x[kEgo + kPy] += 0.15 * i;
    x[kOpp + kPy] += 0.05 * i;
    recs.push_back({reduced(x), 0.01, i % 3 == 0});
  }
  const auto c = f.cert(recs);
  auto h = f.controller(c, hc);
  h.reset(9);
  const EpisodeLog log = run_episode(h, *f.system, f.setup.spec, x0, 60);
  std::set<Tier> seen;
  for (const auto& s : log.steps) {
    const Tier t = s.decision.tier;
    seen.insert(t);
    CHECK(max_abs(s.decision.control.span()) <= 1.0);
    const bool target = racing_reward(f.setup.spec, s.state.span()) > 0.0;
    CHECK(target == (t == Tier::target));
    if (t == Tier::target) continue;
    CHECK(c.is_member(s.state.span()) == (t == Tier::global));
    if (t == Tier::global) continue;
    if (t == Tier::local) {
      REQUIRE(s.decision.local.has_value());
      CHECK(local_member(*s.decision.local, s.state, f.policy.id));
    } else {
      CHECK(t == Tier::recovery);
      CHECK_FALSE(s.decision.local.has_value());
    }
  }
  CHECK(seen.size() >= 2);

  std::ostringstream os;
  write_episode_csv(os, log);
  CHECK(os.str().rfind("t,ex,evx,ey,evy,ez,evz,ox,ovx,oy,ovy,oz,ovz,tier,reward,downwash,wall,ux,uy,uz\n", 0) == 0);
  CHECK(episode_summary(log).rfind("outcome=", 0) == 0);
}

TEST_CASE("controller rejects a certificate for another policy") {
  Fixture f;
  auto c = f.cert({});
  c.policy_id = "other";
  CHECK_THROWS_AS(f.controller(c, f.setup.hierarchy), ContractViolation);
}
