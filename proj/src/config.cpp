#include "reachcert/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace reachcert {

using racing::kStateDim;

using nlohmann::json;

NLOHMANN_JSON_SERIALIZE_ENUM(WarmStart, {{WarmStart::none, "none"},
                                         {WarmStart::policy, "policy"},
                                         {WarmStart::previous, "previous"}})
NLOHMANN_JSON_SERIALIZE_ENUM(CoveringKind, {{CoveringKind::grid, "grid"}, {CoveringKind::halton, "halton"}})

void to_json(json& j, const Method& m) { j = method_name(m); }
void from_json(const json& j, Method& m) {
  if (!parse_method(j.get<std::string>(), m)) throw ContractViolation("config: unknown method " + j.dump());
}

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Box, lo, hi)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ScenarioConfig, epsilon, beta, dimension)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(CoveringConfig, kind, domain, spacing, count, budget)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RacingSpec, corridor_half_width, wall_margin, downwash_scale,
                                                lead_position, lead_velocity, constraint_cap, gate_width, gate_height,
                                                operating_box)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SurrogateConfig, lead_speed, side_offset, clearance, lookahead,
                                                ahead_threshold, merge_accel, kp, kd, kv, max_speed, repulse_gain,
                                                activation, bound)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(MPPIConfig, cost, warm_start, horizon, samples, lambda, sigma)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RacingCostConfig, goal, w_goal, desired_speed, w_speed,
                                                w_lateral_speed, w_control, soft_penalty, target_penalty,
                                                barrier_weight, barrier_margin, violation_penalty, recovery_weight,
                                                recovery_goal_weight)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RefineConfig, samples, r_max, max_iterations, horizon, r_min,
                                                shrink_margin)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(HierarchyConfig, fast, recovery, ablation, cost, refine,
                                                refine_enabled, max_cached, ablation_mppi)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(CbfConfig, alpha, dt, gate_walls)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RacingSetup, dt, control_bound, opponent_q_pos, opponent_q_vel,
                                                opponent_r, opponent_goal, opponent_clamp, gamma, horizon, spec,
                                                surrogate, scenario, eps_x, profile_domain, covering, hierarchy, cbf,
                                                baseline_mppi, initial_box, episode_steps)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Benchmark2D, dt, control_bound, horizon, gamma, target,
                                                target_halfwidth, target_speed, obstacle_lo, obstacle_hi, domain, kp,
                                                kd, levels)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Linear2D, dt, stiffness, damping, control_bound, horizon, domain)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PlanarSetup, scenario, eps_x, has_profile_domain, profile_domain,
                                                covering, refine, oracle_nx, oracle_ny)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Config, system, seed, racing, benchmark2d, linear2d, planar, methods,
                                                trials)

namespace {

// Every key of `given` must exist in the fully populated `known`.
void reject_unknown(const json& given, const json& known, const std::string& path) {
  if (!given.is_object() || !known.is_object()) return;
  for (const auto& [key, value] : given.items()) {
    const auto it = known.find(key);
    if (it == known.end()) throw ContractViolation("config: unknown key " + path + key);
    reject_unknown(value, *it, path + key + ".");
  }
}

bool is_planar(const std::string& s) { return s == "benchmark2d" || s == "linear2d"; }

void apply_seeds(Config& c) {
  c.racing.hierarchy.seed = c.derived_seed(SeedStream::control);
  c.racing.hierarchy.refine.seed = c.derived_seed(SeedStream::refine);
  c.planar.refine.seed = c.derived_seed(SeedStream::refine);
}

const Box& planar_domain(const Config& c) {
  return c.system == "benchmark2d" ? c.benchmark2d.domain : c.linear2d.domain;
}

}  // namespace

Config default_config(const std::string& system) {
  require(system == "racing" || is_planar(system), "config: unknown system " + system);
  Config c;
  c.system = system;
  if (is_planar(system)) {
    c.planar.covering.kind = CoveringKind::grid;
    c.planar.covering.domain = planar_domain(c);
    c.planar.covering.spacing = 2.0 * c.planar.eps_x;
    c.planar.refine.horizon = system == "benchmark2d" ? c.benchmark2d.horizon : c.linear2d.horizon;
  }
  apply_seeds(c);
  return c;
}

void Config::validate() const {
  require(system == "racing" || is_planar(system), "config: unknown system " + system);
  require(trials >= 1, "config: trials must be positive");
  require(!methods.empty(), "config: need at least one method");
  if (system == "racing") {
    racing.spec.validate();
    require(racing.eps_x > 0.0, "config: racing eps_x must be positive");
    require(racing.initial_box.dim() == kStateDim, "config: racing initial box must be 12-D");
    require(racing.profile_domain.dim() == 8 && racing.covering.domain.dim() == 8,
            "config: racing profile and covering domains are 8-D reduced boxes");
    racing.hierarchy.refine.validate();
  } else {
    if (system == "benchmark2d") benchmark2d.validate();
    require(planar.eps_x > 0.0, "config: eps_x must be positive");
    require(planar.covering.domain.dim() == 2, "config: planar covering domain must be 2-D");
    planar.refine.validate();
  }
  (system == "racing" ? racing.scenario : planar.scenario).validate();
}

std::uint64_t Config::derived_seed(SeedStream s) const { return mix_seed(seed, static_cast<std::uint64_t>(s)); }

ExperimentConfig Config::experiment() const {
  ExperimentConfig e;
  e.methods = methods;
  e.initial_box = racing.initial_box;
  e.trials = trials;
  e.episode_steps = racing.episode_steps;
  e.seed = derived_seed(SeedStream::experiment);
  return e;
}

Config parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ContractViolation(std::string("config: ") + e.what());
  }
  require(j.is_object(), "config: top level must be an object");
  const std::string system = j.value("system", std::string("racing"));
  const Config defaults = default_config(system);
  reject_unknown(j, json(defaults), "");
  Config c = defaults;
  try {
    // Merge onto the defaults so nested objects keep their unspecified fields.
    json merged = json(defaults);
    merged.merge_patch(j);
    c = merged.get<Config>();
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("config: ") + e.what());
  }
  apply_seeds(c);
  c.validate();
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const Config& cfg) { return json(cfg).dump(2) + "\n"; }

CertificationSetup make_certification_setup(const Config& cfg) {
  cfg.validate();
  CertificationSetup s;
  s.name = cfg.system;
  s.profile_seed = cfg.derived_seed(SeedStream::profile);
  if (cfg.system == "racing") {
    const RacingSetup& r = cfg.racing;
    s.system = racing_system(r);
    s.spec = racing_spec(r);
    s.policy = racing_policy(r);
    s.embedding = racing_embedding();
    s.scenario = r.scenario;
    s.eps_x = r.eps_x;
    s.profile_domain = r.profile_domain;
    s.covering = r.covering;
    s.horizon = r.horizon;
    s.refine = r.hierarchy.refine;
    return s;
  }
  if (cfg.system == "benchmark2d") {
    s.system = benchmark2d_system(cfg.benchmark2d);
    s.spec = benchmark2d_spec(cfg.benchmark2d);
    s.policy = benchmark2d_policy(cfg.benchmark2d);
    s.horizon = cfg.benchmark2d.horizon;
  } else {
    s.system = linear2d_system(cfg.linear2d);
    s.spec = linear2d_spec(cfg.linear2d);
    s.policy = linear2d_policy(cfg.linear2d);
    s.horizon = cfg.linear2d.horizon;
  }
  s.embedding = Embedding::identity(2);
  s.scenario = cfg.planar.scenario;
  s.eps_x = cfg.planar.eps_x;
  s.profile_domain = cfg.planar.has_profile_domain ? cfg.planar.profile_domain : planar_domain(cfg);
  s.covering = cfg.planar.covering;
  s.refine = cfg.planar.refine;
  return s;
}

SensitivityProfile bound_dynamics(const CertificationSetup& s) {
  const auto pairs = sample_pairs(s.profile_domain, s.eps_x, required_samples(s.scenario), s.profile_seed, s.embedding);
  SensitivityProfile p = bound_deviation(*s.system, s.policy, pairs, s.horizon);
  p.epsilon = s.scenario.epsilon;
  p.beta = s.scenario.beta;
  return p;
}

GlobalCertificate certify(const CertificationSetup& s, const SensitivityProfile& profile) {
  const CertificationProblem problem{s.system.get(), &s.spec, &s.policy, &profile, s.horizon, s.eps_x};
  GlobalCertificate cert = build_certificate(s.covering, s.embedding, problem);
  cert.system = s.name;
  return cert;
}

}  // namespace reachcert
