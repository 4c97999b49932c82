#include "reachcert/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "reachcert/kernels.hpp"
#include "reachcert/parallel.hpp"

namespace reachcert {

void ScenarioConfig::validate() const {
  require(epsilon > 0.0 && epsilon < 1.0, "scenario: epsilon must lie in (0, 1)");
  require(beta > 0.0 && beta < 1.0, "scenario: beta must lie in (0, 1)");
  require(dimension >= 1, "scenario: decision dimension must be >= 1");
}

double sample_bound(const ScenarioConfig& cfg) {
  cfg.validate();
  return (2.0 / cfg.epsilon) * (std::log(1.0 / cfg.beta) + static_cast<double>(cfg.dimension));
}

std::size_t required_samples(const ScenarioConfig& cfg) {
  const double bound = sample_bound(cfg);
  auto n = static_cast<std::size_t>(std::ceil(bound));
  // A bound that is an integer in exact arithmetic can land a few ulps above it.
  if (n >= 1 && static_cast<double>(n - 1) >= bound * (1.0 - 1e-12)) --n;
  return std::max<std::size_t>(n, 1);
}

ScenarioPairSet sample_pairs(const Box& domain, double eps_x, std::size_t n, std::uint64_t seed,
                             const Embedding& embedding) {
  domain.validate_nondegenerate();
  require(eps_x >= 0.0 && std::isfinite(eps_x), "sample_pairs: eps_x must be nonnegative");
  require(n >= 1, "sample_pairs: need at least one pair");
  require(embedding.reduced_dim() == domain.dim(), "sample_pairs: domain/embedding dimension mismatch");
  ScenarioPairSet out;
  out.seed = seed;
  out.domain = domain;
  out.eps_x = eps_x;
  out.nominal.resize(n);
  out.perturbed.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(mix_seed(seed, i));
    out.nominal[i] = embedding.lift(domain.sample(rng));
    out.perturbed[i] = StateVector(sample_ball(out.nominal[i].span(), eps_x, rng));
  }
  return out;
}

ScenarioPairSet sample_pairs(const Box& domain, double eps_x, std::size_t n, std::uint64_t seed) {
  return sample_pairs(domain, eps_x, n, seed, Embedding::identity(domain.dim()));
}

double scalar_scenario_max(std::span<const double> samples) {
  require(!samples.empty(), "scalar_scenario_max: empty sample set");
  return kernels::active().max_value(samples.data(), samples.size());
}

void SensitivityProfile::validate() const {
  require(delta.size() == horizon + 1, "profile: expected horizon+1 bounds");
  for (double d : delta) require(d >= 0.0 && std::isfinite(d), "profile: bounds must be finite and nonnegative");
  require(delta[0] <= eps_x * (1.0 + 1e-12) + 1e-15, "profile: initial bound exceeds eps_x");
}

std::uint64_t SensitivityProfile::hash() const {
  std::ostringstream os;
  write_profile_csv(os, *this);
  return fnv1a(os.str());
}

std::vector<std::vector<double>> pair_deviations(const System& system, const PolicyHandle& policy,
                                                 const ScenarioPairSet& pairs, std::size_t T,
                                                 std::span<const double> weights) {
  require(pairs.size() >= 1, "bound_deviation: no pairs");
  require(weights.empty() || weights.size() == system.state_dim(), "bound_deviation: weight length mismatch");
  std::vector<std::vector<double>> dev(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    const Trajectory nominal = rollout(system, pairs.nominal[i], policy, T);
    const Trajectory replay = rollout_open_loop(system, pairs.perturbed[i], nominal.controls);
    auto& d = dev[i];
    d.resize(T + 1);
    for (std::size_t t = 0; t <= T; ++t) {
      const auto& a = replay.states[t];
      const auto& b = nominal.states[t];
      double s = 0.0;
      for (std::size_t j = 0; j < a.size(); ++j) {
        const double w = weights.empty() ? 1.0 : weights[j];
        const double diff = w * (a[j] - b[j]);
        s += diff * diff;
      }
      d[t] = std::sqrt(s);
    }
  });
  return dev;
}

SensitivityProfile bound_deviation(const System& system, const PolicyHandle& policy, const ScenarioPairSet& pairs,
                                   std::size_t T, std::span<const double> weights) {
  const auto dev = pair_deviations(system, policy, pairs, T, weights);
  SensitivityProfile p;
  p.horizon = T;
  p.eps_x = pairs.eps_x;
  p.samples = pairs.size();
  p.seed = pairs.seed;
  p.domain = describe_domain(pairs.domain);
  p.delta.resize(T + 1);
  std::vector<double> column(pairs.size());
  for (std::size_t t = 0; t <= T; ++t) {
    for (std::size_t i = 0; i < pairs.size(); ++i) column[i] = dev[i][t];
    p.delta[t] = scalar_scenario_max(column);
  }
  return p;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_profile_csv(std::ostream& out, const SensitivityProfile& profile) {
  out << "# seed=" << profile.seed << '\n';
  out << "# N=" << profile.samples << '\n';
  out << "# eps=" << format_double(profile.epsilon) << '\n';
  out << "# beta=" << format_double(profile.beta) << '\n';
  out << "# eps_x=" << format_double(profile.eps_x) << '\n';
  out << "# horizon=" << profile.horizon << '\n';
  out << "# domain=" << profile.domain << '\n';
  out << "t,delta\n";
  for (std::size_t t = 0; t < profile.delta.size(); ++t) out << t << ',' << format_double(profile.delta[t]) << '\n';
}

SensitivityProfile read_profile_csv(std::istream& in) {
  SensitivityProfile p;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      const std::string value = line.substr(eq + 1);
      if (key == "seed") p.seed = std::stoull(value);
      else if (key == "N") p.samples = std::stoull(value);
      else if (key == "eps") p.epsilon = std::stod(value);
      else if (key == "beta") p.beta = std::stod(value);
      else if (key == "eps_x") p.eps_x = std::stod(value);
      else if (key == "domain") p.domain = value;
      continue;
    }
    if (!header) {
      require(line == "t,delta", "profile csv: expected 't,delta' header");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    require(comma != std::string::npos, "profile csv: malformed row '" + line + "'");
    const std::size_t t = std::stoull(line.substr(0, comma));
    require(t == p.delta.size(), "profile csv: rows must be consecutive from t=0");
    p.delta.push_back(std::stod(line.substr(comma + 1)));
  }
  require(!p.delta.empty(), "profile csv: no rows");
  p.horizon = p.delta.size() - 1;
  p.validate();
  return p;
}

std::string describe_domain(const Box& box) {
  std::string s;
  for (std::size_t i = 0; i < box.dim(); ++i) {
    if (i) s += 'x';
    s += '[' + format_double(box.lo[i]) + ',' + format_double(box.hi[i]) + ']';
  }
  return s;
}

}  // namespace reachcert
