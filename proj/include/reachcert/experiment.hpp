#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "reachcert/benchmarks.hpp"
#include "reachcert/certificate.hpp"
#include "reachcert/controllers.hpp"
#include "reachcert/hierarchy.hpp"
#include "reachcert/oracle.hpp"

namespace reachcert {

enum class Method {
  hybrid,
  mppi_cbf,
  mppi_soft,
  surrogate_cbf,
  hybrid_ablation_mppi,
  mppi_plain,
  mppi_warmstart,
  policy_only,
};

const char* method_name(Method m);
bool parse_method(const std::string& text, Method& out);
std::vector<Method> all_methods();
/// Whether the method consults the global certificate.
bool needs_certificate(Method m);

/// Receding-horizon MPPI on one racing cost, optionally warm-started by the
/// policy unroll each step and optionally followed by the CBF filter.
class MppiController final : public Controller {
 public:
  struct Options {
    std::string name;
    RacingCostKind cost = RacingCostKind::plain_goal;
    MPPIConfig mppi;
    RacingCostConfig cost_config;
    bool cbf = false;
    CbfConfig cbf_config;
    const PolicyHandle* warm_policy = nullptr;
  };

  MppiController(const RacingSystem& system, RacingSpec spec, Options opt);
  std::string name() const override { return opt_.name; }
  void reset(std::uint64_t seed) override;
  TierDecision act(const StateVector& x, std::size_t step) override;

 private:
  const RacingSystem& system_;
  RacingSpec spec_;
  Options opt_;
  RacingCost cost_;
  ControlSequence previous_;
  std::uint64_t seed_ = 0;
};

/// The policy alone, optionally CBF-filtered.
class PolicyController final : public Controller {
 public:
  PolicyController(std::string name, const RacingSystem& system, RacingSpec spec, const PolicyHandle& policy,
                   std::optional<CbfConfig> cbf);
  std::string name() const override { return name_; }
  void reset(std::uint64_t) override {}
  TierDecision act(const StateVector& x, std::size_t step) override;

 private:
  std::string name_;
  const RacingSystem& system_;
  RacingSpec spec_;
  const PolicyHandle& policy_;
  std::optional<CbfConfig> cbf_;
};

struct StudyContext {
  const RacingSetup* setup = nullptr;
  const RacingSystem* system = nullptr;
  const PolicyHandle* policy = nullptr;
  const GlobalCertificate* certificate = nullptr;  // required by the switching methods
};

std::unique_ptr<Controller> make_controller(Method m, const StudyContext& ctx);

struct ExperimentConfig {
  std::vector<Method> methods;
  Box initial_box;
  std::size_t trials = 500;
  std::size_t episode_steps = 300;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Trial i draws its initial condition from mix_seed(seed, i), so every method sees the same set.
std::vector<StateVector> sample_initial_conditions(const Box& box, std::size_t n, std::uint64_t seed);

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959964);
/// One-sided Clopper-Pearson upper bound; 1 when trials == 0.
double clopper_pearson_upper(std::size_t events, std::size_t trials, double confidence = 0.95);

struct SuccessRow {
  std::string method;
  std::size_t trials = 0;
  std::size_t success = 0;
  std::size_t collision = 0;
  std::size_t timeout = 0;
  std::size_t lost = 0;
  double fraction = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 1.0;
};

struct SuccessTable {
  std::vector<SuccessRow> rows;
  const SuccessRow* find(const std::string& method) const;
};

SuccessRow tally(const std::string& method, std::span<const Outcome> outcomes);

/// Runs every initial condition for one method (in parallel, one controller per episode).
SuccessRow run_method(Method m, const StudyContext& ctx, std::span<const StateVector> initial, std::size_t steps,
                      std::uint64_t seed, std::vector<EpisodeLog>* logs = nullptr);
/// Receives every method's episode logs, in trial order, once the method finishes.
using EpisodeSink = std::function<void(Method, const std::vector<EpisodeLog>&)>;
/// Initial conditions from mix_seed(seed, 0); episode i of every method is reset with mix_seed(mix_seed(seed, 1), i).
SuccessTable run_study(const ExperimentConfig& cfg, const StudyContext& ctx, const EpisodeSink& sink = {});

inline constexpr const char* kSuccessColumns =
    "method,trials,success,collision,timeout,lost,fraction,wilson_lo,wilson_hi";

void emit_csv(std::ostream& out, const SuccessTable& table);
/// Writes to `path`; throws std::runtime_error on I/O failure.
void emit_csv(const std::string& path, const SuccessTable& table);
SuccessTable parse_success_csv(std::istream& in);

// ---------------------------------------------------------------- risk studies

struct RiskReport {
  std::size_t samples = 0;
  std::size_t members = 0;
  std::size_t violations = 0;  // members whose value is negative
  double estimate = 0.0;       // violations / samples
  double upper = 1.0;          // Clopper-Pearson upper bound on the violation probability
  double epsilon = 0.1;
  bool pass = false;
  bool vacuous = false;        // no sample was a member

  std::string summary() const;
};

using StateSampler = std::function<std::vector<double>(std::mt19937_64&)>;
using StatePredicate = std::function<bool(std::span<const double>)>;

/// Fresh-sample estimate of P(member and value < 0). `value` is only
/// evaluated on members. Sample i uses mix_seed(seed, i).
RiskReport violation_study(const StateSampler& sample, const StatePredicate& member, const ScalarField& value,
                           std::size_t samples, std::uint64_t seed, double epsilon, double confidence = 0.95);

/// Global certificate against the exact lattice oracle, sampling uniformly on
/// `domain`. Throws ContractViolation when the domain does not cover the
/// certificate's domain.
RiskReport violation_study(const GlobalCertificate& cert, const LatticeOracle& oracle, const Box& domain,
                           std::size_t samples, std::uint64_t seed, double epsilon, double confidence = 0.95);

void emit_csv(std::ostream& out, std::span<const RiskReport> reports);

}  // namespace reachcert
