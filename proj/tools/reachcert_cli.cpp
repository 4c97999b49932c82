#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "reachcert/config.hpp"

using namespace reachcert;

namespace {

Config load_or_default(const std::string& path) { return path.empty() ? default_config("racing") : load_config(path); }

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  return f;
}

SensitivityProfile profile_for(const CertificationSetup& s, const std::string& path) {
  if (path.empty()) return bound_dynamics(s);
  std::ifstream in = open_in(path);
  return read_profile_csv(in);
}

GlobalCertificate certificate_for(const CertificationSetup& s, const std::string& path) {
  if (!path.empty()) {
    std::ifstream in = open_in(path);
    return read_certificate(in);
  }
  std::fprintf(stderr, "no certificate given; certifying %zu covering points in process\n",
               s.covering.planned_size());
  return certify(s, bound_dynamics(s));
}

// Holds the racing objects a StudyContext points into.
struct RacingSession {
  RacingSetup setup;
  std::unique_ptr<RacingSystem> system;
  PolicyHandle policy;
  std::optional<GlobalCertificate> certificate;

  RacingSession(const Config& cfg, const std::string& cert_path, bool need_cert) : setup(cfg.racing) {
    require(cfg.system == "racing", "racing commands need a racing config");
    setup.hierarchy.seed = cfg.derived_seed(SeedStream::control);
    system = racing_system(setup);
    policy = racing_policy(setup);
    if (need_cert) certificate = certificate_for(make_certification_setup(cfg), cert_path);
  }
  StudyContext context() const {
    return {&setup, system.get(), &policy, certificate ? &*certificate : nullptr};
  }
};

bool any_needs_certificate(const std::vector<Method>& ms) {
  for (Method m : ms) {
    if (needs_certificate(m)) return true;
  }
  return false;
}

Method method_arg(const std::string& name) {
  Method m;
  if (!parse_method(name, m)) throw ContractViolation("unknown method '" + name + "'");
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical probabilistic verification of reach-avoid policies"};
  app.require_subcommand(1);
  std::string config_path;

  auto* config_cmd = app.add_subcommand("config", "Print the default configuration for a system");
  std::string system_name = "racing";
  config_cmd->add_option("--system", system_name, "racing | benchmark2d | linear2d");

  auto* plan = app.add_subcommand("plan-samples", "Scenario sample count N for (epsilon, beta, d)");
  ScenarioConfig sc;
  plan->add_option("--epsilon", sc.epsilon, "violation level")->capture_default_str();
  plan->add_option("--beta", sc.beta, "confidence parameter")->capture_default_str();
  plan->add_option("-d,--dimension", sc.dimension, "decision variables")->capture_default_str();

  auto* bound = app.add_subcommand("bound-dynamics", "Scenario deviation bounds as CSV");
  std::string out_path;
  bound->add_option("-c,--config", config_path, "JSON config (default: racing defaults)");
  bound->add_option("-o,--out", out_path, "output CSV")->required();

  auto* cert_cmd = app.add_subcommand("certify", "Build the global certificate");
  std::string profile_path, csv_path;
  cert_cmd->add_option("-c,--config", config_path, "JSON config");
  cert_cmd->add_option("-p,--profile", profile_path, "profile CSV from bound-dynamics (computed if omitted)");
  cert_cmd->add_option("-o,--out", out_path, "certificate file")->required();
  cert_cmd->add_option("--csv", csv_path, "also export the records as CSV");

  auto* refine = app.add_subcommand("refine", "Local refinement at the boundary point nearest a state");
  std::string cert_path, state_text;
  refine->add_option("-c,--config", config_path, "JSON config");
  refine->add_option("--cert", cert_path, "certificate file")->required();
  refine->add_option("-x,--state", state_text, "full state, comma separated")->required();
  refine->add_option("-o,--out", out_path, "per-iteration CSV (default: stdout)");

  auto* sim = app.add_subcommand("simulate", "Run one racing episode");
  std::string method_text = "hybrid";
  std::size_t trial = 0;
  sim->add_option("-c,--config", config_path, "JSON config");
  sim->add_option("--cert", cert_path, "certificate file (certified in process if omitted)");
  sim->add_option("-m,--method", method_text, "controller")->capture_default_str();
  auto* state_opt = sim->add_option("-x,--state", state_text, "12-D initial state, comma separated");
  sim->add_option("--trial", trial, "use the experiment's initial condition with this index")->excludes(state_opt);
  sim->add_option("-o,--out", out_path, "per-step CSV (default: stdout)");

  auto* eval = app.add_subcommand("evaluate", "Success study over the configured methods");
  std::string logs_dir;
  eval->add_option("-c,--config", config_path, "JSON config");
  eval->add_option("--cert", cert_path, "certificate file (certified in process if omitted)");
  eval->add_option("-o,--out", out_path, "success table CSV")->required();
  eval->add_option("--logs", logs_dir, "directory for per-episode CSV logs");

  auto* oracle_cmd = app.add_subcommand("oracle", "Exact value table for the 2-D benchmark");
  oracle_cmd->add_option("-c,--config", config_path, "JSON config (benchmark2d)");
  oracle_cmd->add_option("-o,--out", out_path, "output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*config_cmd) {
      std::cout << dump_config(default_config(system_name));
    } else if (*plan) {
      std::printf("%zu\n", required_samples(sc));
      std::fprintf(stderr, "bound (2/eps)(ln(1/beta)+d) = %.6f\n", sample_bound(sc));
    } else if (*bound) {
      const auto s = make_certification_setup(load_or_default(config_path));
      const auto profile = bound_dynamics(s);
      std::ofstream f = open_out(out_path);
      write_profile_csv(f, profile);
    } else if (*cert_cmd) {
      const auto s = make_certification_setup(load_or_default(config_path));
      const auto cert = certify(s, profile_for(s, profile_path));
      std::ofstream f = open_out(out_path);
      write_certificate(f, cert);
      if (!csv_path.empty()) {
        std::ofstream c = open_out(csv_path);
        write_certificate_csv(c, cert);
      }
      std::printf("records=%zu certified=%zu boundary=%zu\n", cert.records.size(), cert.certified_count(),
                  cert.boundary_count());
    } else if (*refine) {
      const auto s = make_certification_setup(load_or_default(config_path));
      std::ifstream in = open_in(cert_path);
      const auto cert = read_certificate(in);
      const StateVector x(parse_numbers(state_text));
      const RefineResult r = iterative_growth(s.refine, *s.system, s.spec, s.policy, cert, x);
      if (out_path.empty()) {
        write_refine_csv(std::cout, r);
      } else {
        std::ofstream f = open_out(out_path);
        write_refine_csv(f, r);
      }
      std::fprintf(stderr, "status=%s", refine_status_name(r.status));
      if (r.certificate) {
        std::fprintf(stderr, " radius=%.9g boundary_record=%zu iterations=%zu", r.certificate->radius,
                     r.certificate->boundary_record, r.certificate->iterations);
      }
      std::fprintf(stderr, "\n");
    } else if (*sim) {
      const Config cfg = load_or_default(config_path);
      const Method m = method_arg(method_text);
      RacingSession session(cfg, cert_path, needs_certificate(m));
      const ExperimentConfig ex = cfg.experiment();
      StateVector x0;
      if (!state_text.empty()) {
        x0 = StateVector(parse_numbers(state_text));
      } else {
        x0 = sample_initial_conditions(ex.initial_box, trial + 1, mix_seed(ex.seed, 0))[trial];
      }
      auto controller = make_controller(m, session.context());
      controller->reset(mix_seed(mix_seed(ex.seed, 1), trial));
      const EpisodeLog log = run_episode(*controller, *session.system, session.setup.spec, x0, ex.episode_steps);
      if (out_path.empty()) {
        write_episode_csv(std::cout, log);
      } else {
        std::ofstream f = open_out(out_path);
        write_episode_csv(f, log);
      }
      std::fprintf(stderr, "%s\n", episode_summary(log).c_str());
    } else if (*eval) {
      const Config cfg = load_or_default(config_path);
      const ExperimentConfig ex = cfg.experiment();
      RacingSession session(cfg, cert_path, any_needs_certificate(ex.methods));
      EpisodeSink sink;
      if (!logs_dir.empty()) {
        std::filesystem::create_directories(logs_dir);
        sink = [&](Method m, const std::vector<EpisodeLog>& logs) {
          for (std::size_t i = 0; i < logs.size(); ++i) {
            std::ofstream f = open_out(logs_dir + "/" + method_name(m) + "_" + std::to_string(i) + ".csv");
            write_episode_csv(f, logs[i]);
          }
        };
      }
      const SuccessTable table = run_study(ex, session.context(), sink);
      emit_csv(out_path, table);
      emit_csv(std::cout, table);
    } else if (*oracle_cmd) {
      Config cfg = config_path.empty() ? default_config("benchmark2d") : load_config(config_path);
      require(cfg.system == "benchmark2d", "oracle: needs a benchmark2d config");
      const Benchmark2D& b = cfg.benchmark2d;
      std::vector<int> levels;
      for (double l : b.levels) {
        const double k = l / b.control_bound;
        require(std::abs(k - std::round(k)) < 1e-12, "oracle: control levels must be integer multiples of the bound");
        levels.push_back(static_cast<int>(std::lround(k)));
      }
      const LatticeOracle oracle(b.dt, b.control_bound, levels, b.horizon, benchmark2d_spec(b));
      const OracleTable t = build_oracle_table(oracle, b.domain, cfg.planar.oracle_nx, cfg.planar.oracle_ny, b.levels);
      std::ofstream f = open_out(out_path);
      write_oracle_csv(f, t);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
