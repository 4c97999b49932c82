#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "reachcert/core.hpp"
#include "reachcert/embedding.hpp"
#include "reachcert/policy.hpp"
#include "reachcert/systems.hpp"

namespace reachcert {

struct ScenarioConfig {
  double epsilon = 0.1;
  double beta = 0.001;
  int dimension = 1;

  void validate() const;
};

/// (2/eps)(ln(1/beta) + d) before rounding.
double sample_bound(const ScenarioConfig& cfg);
/// Smallest integer N with N >= (2/eps)(ln(1/beta) + d).
std::size_t required_samples(const ScenarioConfig& cfg);

/// N nominal/perturbed initial-state pairs. Nominals are uniform on the
/// (reduced-coordinate) domain and lifted through `embedding`; each perturbed
/// state is uniform on the full-state Euclidean eps_x-ball about its nominal.
struct ScenarioPairSet {
  std::vector<StateVector> nominal;
  std::vector<StateVector> perturbed;
  std::uint64_t seed = 0;
  Box domain;
  double eps_x = 0.0;

  std::size_t size() const { return nominal.size(); }
};

ScenarioPairSet sample_pairs(const Box& domain, double eps_x, std::size_t n, std::uint64_t seed,
                             const Embedding& embedding);
ScenarioPairSet sample_pairs(const Box& domain, double eps_x, std::size_t n, std::uint64_t seed);

/// Optimal value of min z s.t. s_i <= z for all i.
double scalar_scenario_max(std::span<const double> samples);

/// Per-step deviation bounds delta[t], t = 0..T.
struct SensitivityProfile {
  std::size_t horizon = 0;
  std::vector<double> delta;
  double eps_x = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  double beta = 0.0;
  std::string domain;

  void validate() const;
  /// FNV-1a over the serialized profile; certificates record it.
  std::uint64_t hash() const;
};

/// Per-pair deviation sequences |x_t - xbar_t|, t = 0..T, with the nominal
/// closed-loop controls replayed open-loop from the perturbed state. A
/// non-empty `weights` applies a diagonal weight inside the norm.
std::vector<std::vector<double>> pair_deviations(const System& system, const PolicyHandle& policy,
                                                 const ScenarioPairSet& pairs, std::size_t T,
                                                 std::span<const double> weights = {});

/// delta[t] = max_i |x_t^(i) - xbar_t^(i)|_2.
SensitivityProfile bound_deviation(const System& system, const PolicyHandle& policy, const ScenarioPairSet& pairs,
                                   std::size_t T, std::span<const double> weights = {});

/// CSV: '#'-prefixed metadata lines, then "t,delta" rows.
void write_profile_csv(std::ostream& out, const SensitivityProfile& profile);
SensitivityProfile read_profile_csv(std::istream& in);

/// Compact "[lo,hi]x[lo,hi]..." description of a box.
std::string describe_domain(const Box& box);

}  // namespace reachcert
