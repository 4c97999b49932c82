#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "reachcert/benchmarks.hpp"
#include "reachcert/certificate.hpp"
#include "reachcert/experiment.hpp"
#include "reachcert/local_refiner.hpp"
#include "reachcert/scenario.hpp"

namespace reachcert {

/// Certification settings for the planar benchmarks (racing carries its own).
struct PlanarSetup {
  ScenarioConfig scenario{0.1, 0.001, 1};
  double eps_x = 0.1;
  bool has_profile_domain = false;  // default: the system domain
  Box profile_domain;
  CoveringConfig covering;          // default: grid at 2 eps_x over the system domain
  RefineConfig refine;
  std::size_t oracle_nx = 91;
  std::size_t oracle_ny = 61;
};

/// Independent random streams derived from the root seed.
enum class SeedStream : std::uint64_t { profile = 1, refine = 2, control = 3, experiment = 4, validation = 5 };

struct Config {
  std::string system = "racing";  // racing | benchmark2d | linear2d
  std::uint64_t seed = 0;
  RacingSetup racing;
  Benchmark2D benchmark2d;
  Linear2D linear2d;
  PlanarSetup planar;
  std::vector<Method> methods = all_methods();
  std::size_t trials = 500;

  void validate() const;
  std::uint64_t derived_seed(SeedStream s) const;
  /// Racing experiment: methods x trials over racing.initial_box.
  ExperimentConfig experiment() const;
};

Config default_config(const std::string& system = "racing");
/// Missing keys keep their defaults; unknown keys are rejected.
Config parse_config(const std::string& json_text);
Config load_config(const std::string& path);
/// Complete JSON document, every field included.
std::string dump_config(const Config& cfg);

/// Everything the certification pipeline needs for one system.
struct CertificationSetup {
  std::string name;
  std::unique_ptr<System> system;
  RewardConstraintSpec spec;
  PolicyHandle policy;
  Embedding embedding;
  ScenarioConfig scenario;
  double eps_x = 0.1;
  Box profile_domain;
  CoveringConfig covering;
  std::size_t horizon = 0;
  RefineConfig refine;
  std::uint64_t profile_seed = 0;
};

CertificationSetup make_certification_setup(const Config& cfg);

/// Scenario sensitivity profile: required_samples pairs over the profile domain.
SensitivityProfile bound_dynamics(const CertificationSetup& s);
/// Global certificate over the covering, labelled with the setup's name.
GlobalCertificate certify(const CertificationSetup& s, const SensitivityProfile& profile);

}  // namespace reachcert
