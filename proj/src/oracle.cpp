#include "reachcert/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "reachcert/parallel.hpp"

namespace reachcert {

namespace {

struct Search {
  const System& system;
  const RewardConstraintSpec& spec;
  std::span<const ControlVector> grid;
  std::size_t T;
  double best = -std::numeric_limits<double>::infinity();

  // running: min_{tau<=t} gamma^tau c(x_tau); w = gamma^t.
  void visit(const StateVector& x, std::size_t t, double running, double w) {
    running = std::min(running, w * spec.constraint(x.span()));
    best = std::max(best, std::min(w * spec.reward(x.span()), running));
    if (t == T || running <= best) return;
    for (const auto& u : grid) visit(system.step(x, u), t + 1, running, w * spec.gamma);
  }
};

}  // namespace

double brute_force_value(const System& system, const RewardConstraintSpec& spec, const StateVector& x0,
                         std::size_t T, std::span<const ControlVector> control_grid, std::uint64_t budget) {
  spec.validate();
  require(!control_grid.empty(), "brute force: empty control grid");
  require(x0.size() == system.state_dim(), "brute force: state dimension mismatch");
  double leaves = 1.0;
  for (std::size_t t = 0; t < T; ++t) leaves *= static_cast<double>(control_grid.size());
  if (leaves > static_cast<double>(budget)) {
    throw BudgetExceeded("brute force: " + std::to_string(control_grid.size()) + "^" + std::to_string(T) +
                         " sequences exceed the budget of " + std::to_string(budget));
  }
  Search s{system, spec, control_grid, T};
  s.visit(x0, 0, std::numeric_limits<double>::infinity(), 1.0);
  return s.best;
}

LatticeOracle::LatticeOracle(double dt, double unit, std::vector<int> levels, std::size_t T, RewardConstraintSpec spec)
    : dt_(dt), unit_(unit), levels_(std::move(levels)), T_(T), spec_(std::move(spec)) {
  require(dt_ > 0.0 && unit_ > 0.0, "lattice oracle: dt and unit must be positive");
  require(!levels_.empty(), "lattice oracle: need at least one control level");
  spec_.validate();
  std::sort(levels_.begin(), levels_.end());
  levels_.erase(std::unique(levels_.begin(), levels_.end()), levels_.end());
}

double LatticeOracle::value(double p0, double v0) const {
  // Node key (S, P); M = best running constraint minimum over paths to the node.
  std::map<std::pair<long, long>, double> layer{{{0, 0}, std::numeric_limits<double>::infinity()}};
  double best = -std::numeric_limits<double>::infinity();
  double w = 1.0;
  for (std::size_t t = 0;; ++t) {
    const double td = static_cast<double>(t);
    for (auto& [key, m] : layer) {
      const double x[2] = {p0 + td * dt_ * v0 + dt_ * dt_ * unit_ * static_cast<double>(key.second),
                           v0 + dt_ * unit_ * static_cast<double>(key.first)};
      m = std::min(m, w * spec_.constraint(x));
      best = std::max(best, std::min(w * spec_.reward(x), m));
    }
    if (t == T_) break;
    std::map<std::pair<long, long>, double> next;
    for (const auto& [key, m] : layer) {
      if (m <= best) continue;  // cannot improve on the current best
      for (int k : levels_) {
        const std::pair<long, long> child{key.first + k, key.second + key.first};
        auto [it, inserted] = next.emplace(child, m);
        if (!inserted) it->second = std::max(it->second, m);
      }
    }
    layer = std::move(next);
    w *= spec_.gamma;
  }
  return best;
}

std::vector<double> OracleTable::node(std::size_t i, std::size_t j) const {
  auto coord = [](double lo, double hi, std::size_t n, std::size_t k) {
    return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  };
  return {coord(domain.lo[0], domain.hi[0], nx, i), coord(domain.lo[1], domain.hi[1], ny, j)};
}

OracleTable build_oracle_table(const LatticeOracle& oracle, const Box& domain, std::size_t nx, std::size_t ny,
                               std::vector<double> control_levels) {
  require(domain.dim() == 2 && nx >= 1 && ny >= 1, "oracle table: need a 2-D domain and a nonempty grid");
  OracleTable t;
  t.domain = domain;
  t.nx = nx;
  t.ny = ny;
  t.horizon = oracle.horizon();
  t.control_levels = std::move(control_levels);
  t.values.resize(nx * ny);
  parallel_for(nx * ny, [&](std::size_t k) { t.values[k] = oracle.value(t.node(k / ny, k % ny)); });
  for (double v : t.values) require(std::isfinite(v), "oracle table: non-finite value");
  return t;
}

void write_oracle_csv(std::ostream& out, const OracleTable& t) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "# domain=%.17g,%.17g,%.17g,%.17g\n", t.domain.lo[0], t.domain.hi[0],
                t.domain.lo[1], t.domain.hi[1]);
  out << buf;
  out << "# grid=" << t.nx << 'x' << t.ny << '\n';
  out << "# horizon=" << t.horizon << '\n';
  out << "# controls=";
  for (std::size_t i = 0; i < t.control_levels.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.17g", i ? ";" : "", t.control_levels[i]);
    out << buf;
  }
  out << "\nx0,x1,value\n";
  for (std::size_t i = 0; i < t.nx; ++i) {
    for (std::size_t j = 0; j < t.ny; ++j) {
      const auto x = t.node(i, j);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", x[0], x[1], t.at(i, j));
      out << buf;
    }
  }
}

OracleTable read_oracle_csv(std::istream& in) {
  OracleTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# domain=", 0) == 0) {
      double v[4];
      require(std::sscanf(line.c_str() + 9, "%lf,%lf,%lf,%lf", &v[0], &v[1], &v[2], &v[3]) == 4,
              "oracle csv: malformed domain");
      t.domain = Box{{v[0], v[2]}, {v[1], v[3]}};
    } else if (line.rfind("# grid=", 0) == 0) {
      require(std::sscanf(line.c_str() + 7, "%zux%zu", &t.nx, &t.ny) == 2, "oracle csv: malformed grid");
    } else if (line.rfind("# horizon=", 0) == 0) {
      t.horizon = std::stoul(line.substr(10));
    } else if (line.rfind("# controls=", 0) == 0) {
      std::stringstream ss(line.substr(11));
      std::string item;
      while (std::getline(ss, item, ';')) {
        if (!item.empty()) t.control_levels.push_back(std::stod(item));
      }
    } else if (line == "x0,x1,value" || line.empty()) {
      continue;
    } else {
      double a, b, v;
      require(std::sscanf(line.c_str(), "%lf,%lf,%lf", &a, &b, &v) == 3, "oracle csv: malformed row");
      t.values.push_back(v);
    }
  }
  require(t.values.size() == t.nx * t.ny, "oracle csv: row count does not match the grid");
  return t;
}

}  // namespace reachcert
