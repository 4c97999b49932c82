#include "reachcert/experiment.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "reachcert/parallel.hpp"

namespace reachcert {

using namespace racing;

const char* method_name(Method m) {
  switch (m) {
    case Method::hybrid: return "hybrid";
    case Method::mppi_cbf: return "mppi-cbf";
    case Method::mppi_soft: return "mppi-soft";
    case Method::surrogate_cbf: return "surrogate-cbf";
    case Method::hybrid_ablation_mppi: return "hybrid-ablation-mppi";
    case Method::mppi_plain: return "mppi-plain";
    case Method::mppi_warmstart: return "mppi-warmstart";
    case Method::policy_only: return "policy-only";
  }
  return "unknown";
}

std::vector<Method> all_methods() {
  return {Method::hybrid,     Method::mppi_cbf,       Method::mppi_soft,  Method::surrogate_cbf,
          Method::hybrid_ablation_mppi, Method::mppi_plain, Method::mppi_warmstart, Method::policy_only};
}

bool parse_method(const std::string& text, Method& out) {
  for (Method m : all_methods()) {
    if (text == method_name(m)) {
      out = m;
      return true;
    }
  }
  return false;
}

bool needs_certificate(Method m) { return m == Method::hybrid || m == Method::hybrid_ablation_mppi; }

// ---------------------------------------------------------------- controllers

MppiController::MppiController(const RacingSystem& system, RacingSpec spec, Options opt)
    : system_(system), spec_(std::move(spec)), opt_(std::move(opt)), cost_(opt_.cost, spec_, opt_.cost_config) {
  require(opt_.cost != RacingCostKind::recovery, "mppi controller: the recovery cost needs the hierarchy");
  opt_.mppi.validate(kControlDim);
}

void MppiController::reset(std::uint64_t seed) {
  seed_ = seed;
  previous_.clear();
}

TierDecision MppiController::act(const StateVector& x, std::size_t step) {
  ControlSequence warm;
  if (opt_.warm_policy != nullptr) {
    warm = policy_unroll(system_, *opt_.warm_policy, x, opt_.mppi.horizon);
  } else if (opt_.mppi.warm_start != WarmStart::none && previous_.size() == opt_.mppi.horizon) {
    warm = shift_sequence(previous_);
  }
  MPPIResult r = mppi_step(opt_.mppi, cost_, system_, x, warm, mix_seed(seed_, step));
  previous_ = std::move(r.sequence);
  TierDecision d;
  d.control = r.control;
  if (opt_.cbf) {
    d.control = cbf_filter(opt_.cbf_config, spec_, system_.opponent(), x, d.control, system_.spec().control_bound);
  }
  return d;
}

PolicyController::PolicyController(std::string name, const RacingSystem& system, RacingSpec spec,
                                   const PolicyHandle& policy, std::optional<CbfConfig> cbf)
    : name_(std::move(name)), system_(system), spec_(std::move(spec)), policy_(policy), cbf_(cbf) {}

TierDecision PolicyController::act(const StateVector& x, std::size_t) {
  TierDecision d;
  d.control = system_.clamp(policy_(x));
  if (cbf_) d.control = cbf_filter(*cbf_, spec_, system_.opponent(), x, d.control, system_.spec().control_bound);
  return d;
}

std::unique_ptr<Controller> make_controller(Method m, const StudyContext& ctx) {
  require(ctx.setup != nullptr && ctx.system != nullptr && ctx.policy != nullptr, "study: incomplete context");
  const RacingSetup& s = *ctx.setup;
  auto mppi = [&](RacingCostKind cost, bool cbf, const PolicyHandle* warm) {
    MppiController::Options o;
    o.name = method_name(m);
    o.cost = cost;
    o.mppi = s.baseline_mppi;
    o.cost_config = s.hierarchy.cost;
    o.cbf = cbf;
    o.cbf_config = s.cbf;
    o.warm_policy = warm;
    return std::make_unique<MppiController>(*ctx.system, s.spec, std::move(o));
  };
  switch (m) {
    case Method::hybrid:
    case Method::hybrid_ablation_mppi: {
      require(ctx.certificate != nullptr, std::string("study: method '") + method_name(m) + "' needs a certificate");
      HierarchyConfig h = s.hierarchy;
      h.ablation_mppi = m == Method::hybrid_ablation_mppi;
      return std::make_unique<HierarchicalController>(*ctx.system, s.spec, racing_spec(s), *ctx.policy,
                                                      *ctx.certificate, h);
    }
    case Method::mppi_cbf: return mppi(RacingCostKind::plain_goal, true, nullptr);
    case Method::mppi_soft: return mppi(RacingCostKind::soft_constraint, false, nullptr);
    case Method::mppi_plain: return mppi(RacingCostKind::plain_goal, false, nullptr);
    case Method::mppi_warmstart: return mppi(RacingCostKind::plain_goal, false, ctx.policy);
    case Method::surrogate_cbf:
      return std::make_unique<PolicyController>(method_name(m), *ctx.system, s.spec, *ctx.policy, s.cbf);
    case Method::policy_only:
      return std::make_unique<PolicyController>(method_name(m), *ctx.system, s.spec, *ctx.policy, std::nullopt);
  }
  throw ContractViolation("study: unknown method");
}

// ---------------------------------------------------------------- studies

void ExperimentConfig::validate() const {
  require(trials >= 1, "experiment: trial count must be >= 1");
  require(episode_steps >= 1, "experiment: episode length must be >= 1");
  require(!methods.empty(), "experiment: no methods selected");
  require(initial_box.dim() == kStateDim, "experiment: initial-condition box must be 12-D");
}

std::vector<StateVector> sample_initial_conditions(const Box& box, std::size_t n, std::uint64_t seed) {
  std::vector<StateVector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(mix_seed(seed, i));
    std::vector<double> x(box.dim());
    for (std::size_t d = 0; d < box.dim(); ++d) {
      x[d] = box.lo[d] == box.hi[d] ? box.lo[d] : std::uniform_real_distribution<double>(box.lo[d], box.hi[d])(rng);
    }
    out.emplace_back(std::move(x));
  }
  return out;
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  require(successes <= trials, "wilson: successes exceed trials");
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  // The endpoints are exact at k = 0 and k = n, where rounding would otherwise exclude p.
  return {successes == 0 ? 0.0 : std::max(0.0, center - half),
          successes == trials ? 1.0 : std::min(1.0, center + half)};
}

double clopper_pearson_upper(std::size_t events, std::size_t trials, double confidence) {
  require(events <= trials, "clopper-pearson: events exceed trials");
  require(confidence > 0.0 && confidence < 1.0, "clopper-pearson: confidence must lie in (0, 1)");
  if (trials == 0 || events == trials) return 1.0;
  return boost::math::ibeta_inv(static_cast<double>(events + 1), static_cast<double>(trials - events), confidence);
}

const SuccessRow* SuccessTable::find(const std::string& method) const {
  for (const auto& r : rows) {
    if (r.method == method) return &r;
  }
  return nullptr;
}

SuccessRow tally(const std::string& method, std::span<const Outcome> outcomes) {
  SuccessRow r;
  r.method = method;
  r.trials = outcomes.size();
  for (Outcome o : outcomes) {
    switch (o) {
      case Outcome::success: ++r.success; break;
      case Outcome::collision: ++r.collision; break;
      case Outcome::timeout: ++r.timeout; break;
      case Outcome::lost: ++r.lost; break;
    }
  }
  r.fraction = r.trials ? static_cast<double>(r.success) / static_cast<double>(r.trials) : 0.0;
  const WilsonInterval w = wilson_interval(r.success, r.trials);
  r.wilson_lo = w.lo;
  r.wilson_hi = w.hi;
  return r;
}

SuccessRow run_method(Method m, const StudyContext& ctx, std::span<const StateVector> initial, std::size_t steps,
                      std::uint64_t seed, std::vector<EpisodeLog>* logs) {
  std::vector<Outcome> outcomes(initial.size());
  std::vector<EpisodeLog> kept(logs ? initial.size() : 0);
  // Constructed up front so a missing certificate fails before any episode runs.
  (void)make_controller(m, ctx);
  parallel_for(initial.size(), [&](std::size_t i) {
    auto c = make_controller(m, ctx);
    c->reset(mix_seed(seed, i));
    EpisodeLog log = run_episode(*c, *ctx.system, ctx.setup->spec, initial[i], steps);
    outcomes[i] = log.outcome;
    if (logs) kept[i] = std::move(log);
  });
  if (logs) *logs = std::move(kept);
  return tally(method_name(m), outcomes);
}

SuccessTable run_study(const ExperimentConfig& cfg, const StudyContext& ctx, const EpisodeSink& sink) {
  cfg.validate();
  const auto initial = sample_initial_conditions(cfg.initial_box, cfg.trials, mix_seed(cfg.seed, 0));
  SuccessTable t;
  for (Method m : cfg.methods) {
    std::vector<EpisodeLog> logs;
    t.rows.push_back(run_method(m, ctx, initial, cfg.episode_steps, mix_seed(cfg.seed, 1), sink ? &logs : nullptr));
    if (sink) sink(m, logs);
  }
  return t;
}

void emit_csv(std::ostream& out, const SuccessTable& table) {
  out << kSuccessColumns << '\n';
  char buf[256];
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%zu,%zu,%zu,%.17g,%.17g,%.17g\n", r.method.c_str(), r.trials,
                  r.success, r.collision, r.timeout, r.lost, r.fraction, r.wilson_lo, r.wilson_hi);
    out << buf;
  }
}

void emit_csv(const std::string& path, const SuccessTable& table) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  emit_csv(f, table);
  f.flush();
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

SuccessTable parse_success_csv(std::istream& in) {
  SuccessTable t;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == kSuccessColumns, "success csv: unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[9];
    for (auto& s : f) require(static_cast<bool>(std::getline(ss, s, ',')), "success csv: short row");
    SuccessRow r;
    r.method = f[0];
    r.trials = std::stoul(f[1]);
    r.success = std::stoul(f[2]);
    r.collision = std::stoul(f[3]);
    r.timeout = std::stoul(f[4]);
    r.lost = std::stoul(f[5]);
    r.fraction = std::stod(f[6]);
    r.wilson_lo = std::stod(f[7]);
    r.wilson_hi = std::stod(f[8]);
    require(r.success + r.collision + r.timeout + r.lost == r.trials, "success csv: counts do not sum to trials");
    t.rows.push_back(std::move(r));
  }
  return t;
}

// ---------------------------------------------------------------- risk studies

std::string RiskReport::summary() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "samples=%zu members=%zu violations=%zu estimate=%.6g upper=%.6g eps=%.6g %s%s",
                samples, members, violations, estimate, upper, epsilon, pass ? "PASS" : "FAIL",
                vacuous ? " (vacuous)" : "");
  return buf;
}

RiskReport violation_study(const StateSampler& sample, const StatePredicate& member, const ScalarField& value,
                           std::size_t samples, std::uint64_t seed, double epsilon, double confidence) {
  require(samples >= 1, "violation study: need at least one sample");
  require(epsilon > 0.0 && epsilon < 1.0, "violation study: epsilon must lie in (0, 1)");
  std::vector<char> is_member(samples, 0), bad(samples, 0);
  parallel_for(samples, [&](std::size_t i) {
    std::mt19937_64 rng(mix_seed(seed, i));
    const auto x = sample(rng);
    if (!member(x)) return;
    is_member[i] = 1;
    bad[i] = value(x) < 0.0 ? 1 : 0;
  });
  RiskReport r;
  r.samples = samples;
  r.epsilon = epsilon;
  for (std::size_t i = 0; i < samples; ++i) {
    r.members += is_member[i];
    r.violations += bad[i];
  }
  r.estimate = static_cast<double>(r.violations) / static_cast<double>(samples);
  r.upper = clopper_pearson_upper(r.violations, samples, confidence);
  r.vacuous = r.members == 0;
  r.pass = r.vacuous || r.upper <= epsilon;
  return r;
}

RiskReport violation_study(const GlobalCertificate& cert, const LatticeOracle& oracle, const Box& domain,
                           std::size_t samples, std::uint64_t seed, double epsilon, double confidence) {
  require(domain.dim() == cert.domain.dim() && domain.dim() == 2, "violation study: domain dimension mismatch");
  for (std::size_t d = 0; d < domain.dim(); ++d) {
    require(domain.lo[d] <= cert.domain.lo[d] && domain.hi[d] >= cert.domain.hi[d],
            "violation study: sampling domain does not cover the certified domain");
  }
  return violation_study([&](std::mt19937_64& rng) { return domain.sample(rng); },
                         [&](std::span<const double> x) { return cert.is_member(x); },
                         [&](std::span<const double> x) { return oracle.value(x); }, samples, seed, epsilon,
                         confidence);
}

void emit_csv(std::ostream& out, std::span<const RiskReport> reports) {
  out << "samples,members,violations,estimate,upper,epsilon,pass,vacuous\n";
  char buf[256];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.17g,%.17g,%.17g,%d,%d\n", r.samples, r.members, r.violations,
                  r.estimate, r.upper, r.epsilon, r.pass ? 1 : 0, r.vacuous ? 1 : 0);
    out << buf;
  }
}

}  // namespace reachcert
