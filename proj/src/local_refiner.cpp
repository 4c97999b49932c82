#include "reachcert/local_refiner.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

#include "reachcert/parallel.hpp"

namespace reachcert {

void RefineConfig::validate() const {
  require(samples >= 1, "refine: need at least one sample per iteration");
  require(max_iterations >= 1, "refine: need at least one iteration");
  require(r_max > 0.0, "refine: r_max must be positive");
  require(r_min >= 0.0 && r_min < r_max, "refine: r_min must lie in [0, r_max)");
  require(shrink_margin >= 0.0, "refine: shrink margin must be nonnegative");
  require(horizon >= 1, "refine: horizon must be >= 1");
}

const char* refine_status_name(RefineStatus s) {
  switch (s) {
    case RefineStatus::success: return "success";
    case RefineStatus::radius_collapse: return "radius_collapse";
    case RefineStatus::iterations_exhausted: return "iterations_exhausted";
  }
  return "unknown";
}

RefineResult grow_ball(const RefineConfig& cfg, const System& system, const RewardConstraintSpec& spec,
                       const PolicyHandle& policy, const StateVector& center, const Embedding& embedding) {
  cfg.validate();
  require(center.size() == embedding.reduced_dim(), "refine: center dimension mismatch");
  require(embedding.full_dim() == system.state_dim(), "refine: embedding/system mismatch");
  RefineResult result;
  double r = cfg.r_max;
  std::vector<double> dist(cfg.samples), value(cfg.samples);
  for (std::size_t iter = 0; iter < cfg.max_iterations; ++iter) {
    const std::uint64_t round_seed = mix_seed(cfg.seed, iter);
    parallel_for(cfg.samples, [&](std::size_t j) {
      std::mt19937_64 rng(mix_seed(round_seed, j));
      const auto z = sample_ball(center.span(), r, rng);
      dist[j] = distance2(z, center.span());
      value[j] = rollout_value(spec, rollout(system, embedding.lift(z), policy, cfg.horizon));
    });
    RefineIteration it{r, 0, std::numeric_limits<double>::infinity()};
    for (std::size_t j = 0; j < cfg.samples; ++j) {
      if (value[j] <= 0.0) {
        ++it.violations;
        it.closest_violation = std::min(it.closest_violation, dist[j]);
      }
    }
    result.history.push_back(it);
    if (it.violations == 0) {
      LocalCertificate lc;
      lc.center = center;
      lc.radius = r;
      lc.policy_id = policy.id;
      lc.iterations = iter + 1;
      lc.seed = cfg.seed;
      lc.embedding = embedding;
      result.status = RefineStatus::success;
      result.certificate = std::move(lc);
      return result;
    }
    // Closed ball: step one ulp inside the violation so it is excluded.
    r = std::nextafter(it.closest_violation, 0.0) - cfg.shrink_margin;
    if (r < cfg.r_min || r <= 0.0) {
      result.status = RefineStatus::radius_collapse;
      return result;
    }
  }
  result.status = RefineStatus::iterations_exhausted;
  return result;
}

RefineResult iterative_growth(const RefineConfig& cfg, const System& system, const RewardConstraintSpec& spec,
                              const PolicyHandle& policy, const GlobalCertificate& cert, const StateVector& x_t) {
  require(cert.policy_id == policy.id,
          "refine: certificate issued for policy '" + cert.policy_id + "', not '" + policy.id + "'");
  const BoundaryHit hit = cert.nearest_boundary(x_t.span());
  const Embedding local = cert.embedding.with_context_of(x_t.span());
  RefineResult result = grow_ball(cfg, system, spec, policy, hit.point, local);
  if (result.certificate) result.certificate->boundary_record = hit.record;
  return result;
}

double local_distance(const LocalCertificate& lc, std::span<const double> x) {
  const double d = distance2(lc.embedding.reduce(x), lc.center.span());
  return std::sqrt(d * d + lc.embedding.residual2(x));
}

bool local_member(const LocalCertificate& lc, const StateVector& x) {
  if (x.size() != lc.embedding.full_dim()) return false;
  return local_distance(lc, x.span()) <= lc.radius;
}

bool local_member(const LocalCertificate& lc, const StateVector& x, const std::string& policy_id) {
  require(lc.policy_id == policy_id,
          "local certificate bound to policy '" + lc.policy_id + "' queried for '" + policy_id + "'");
  return local_member(lc, x);
}

void write_refine_csv(std::ostream& out, const RefineResult& result) {
  out << "iteration,radius,violations,closest_violation\n";
  char buf[128];
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    const auto& h = result.history[i];
    const double cv = h.violations > 0 ? h.closest_violation : std::nan("");
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%zu,%.17g\n", i, h.radius, h.violations, cv);
    out << buf;
  }
}

}  // namespace reachcert
