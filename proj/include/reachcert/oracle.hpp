#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "reachcert/core.hpp"
#include "reachcert/reach_measure.hpp"
#include "reachcert/systems.hpp"

namespace reachcert {

/// max over every open-loop sequence drawn from `control_grid` (candidate
/// control vectors) of rollout_value. Exhaustive depth-first search with
/// branch-and-bound on the running constraint term, which never changes the
/// result. Throws BudgetExceeded when |grid|^T > budget.
double brute_force_value(const System& system, const RewardConstraintSpec& spec, const StateVector& x0,
                         std::size_t T, std::span<const ControlVector> control_grid,
                         std::uint64_t budget = 50'000'000);

/// Exact optimal value for a one-axis double integrator [p, v] with controls
/// k * unit, k in `levels`. Positions and velocities after t steps from
/// (p0, v0) are p0 + t dt v0 + dt^2 unit P and v0 + dt unit S for integers
/// (S, P), so dynamic programming over the reachable lattice replaces the
/// enumeration of sequences.
class LatticeOracle {
 public:
  LatticeOracle(double dt, double unit, std::vector<int> levels, std::size_t T, RewardConstraintSpec spec);

  double value(double p0, double v0) const;
  double value(std::span<const double> x) const { return value(x[0], x[1]); }
  std::size_t horizon() const { return T_; }

 private:
  double dt_;
  double unit_;
  std::vector<int> levels_;
  std::size_t T_;
  RewardConstraintSpec spec_;
};

/// Oracle values on a regular grid over a 2-D domain.
struct OracleTable {
  Box domain;
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::size_t horizon = 0;
  std::vector<double> control_levels;
  std::vector<double> values;  // row-major, y fastest

  double at(std::size_t i, std::size_t j) const { return values[i * ny + j]; }
  std::vector<double> node(std::size_t i, std::size_t j) const;
};

OracleTable build_oracle_table(const LatticeOracle& oracle, const Box& domain, std::size_t nx, std::size_t ny,
                               std::vector<double> control_levels);

/// Header "x0,x1,value" then one row per node; metadata on '#' lines.
void write_oracle_csv(std::ostream& out, const OracleTable& table);
OracleTable read_oracle_csv(std::istream& in);

}  // namespace reachcert
