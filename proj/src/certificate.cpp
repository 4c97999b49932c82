#include "reachcert/certificate.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <type_traits>

#include "reachcert/parallel.hpp"

namespace reachcert {

CertifiedMargins certified_margins(const RewardConstraintSpec& spec, const Trajectory& nominal,
                                   const SensitivityProfile& profile) {
  require(profile.delta.size() >= nominal.states.size(), "certify: profile horizon shorter than the rollout");
  CertifiedMargins m;
  m.reward.resize(nominal.states.size());
  m.constraint.resize(nominal.states.size());
  for (std::size_t t = 0; t < nominal.states.size(); ++t) {
    const auto x = nominal.states[t].span();
    m.reward[t] = spec.reward(x) - spec.lipschitz_reward * profile.delta[t];
    m.constraint[t] = spec.constraint(x) - spec.lipschitz_constraint * profile.delta[t];
  }
  return m;
}

double certify_point(const RewardConstraintSpec& spec, const System& system, const PolicyHandle& policy,
                     const SensitivityProfile& profile, const StateVector& xbar0, std::size_t T) {
  require(profile.horizon >= T, "certify_point: profile horizon shorter than T");
  const Trajectory nominal = rollout(system, xbar0, policy, T);
  const CertifiedMargins m = certified_margins(spec, nominal, profile);
  return discounted_reach_avoid(m.reward, m.constraint, spec.gamma);
}

namespace {

std::vector<std::size_t> grid_extents(const CoveringConfig& cfg) {
  std::vector<std::size_t> ext(cfg.domain.dim());
  for (std::size_t d = 0; d < ext.size(); ++d) {
    const double width = cfg.domain.hi[d] - cfg.domain.lo[d];
    ext[d] = static_cast<std::size_t>(std::floor(width / cfg.spacing + 1e-9)) + 1;
  }
  return ext;
}

double radical_inverse(std::size_t index, std::size_t base) {
  double inv = 1.0 / static_cast<double>(base), f = inv, r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

constexpr std::size_t kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

}  // namespace

std::size_t CoveringConfig::planned_size() const {
  domain.validate_nondegenerate();
  std::size_t total = 1;
  if (kind == CoveringKind::grid) {
    require(spacing > 0.0, "covering: grid spacing must be positive");
    for (std::size_t e : grid_extents(*this)) {
      if (total > budget / e) throw BudgetExceeded("covering: grid exceeds the point budget");
      total *= e;
    }
  } else {
    require(count >= 1, "covering: Halton count must be >= 1");
    require(domain.dim() <= std::size(kPrimes), "covering: Halton dimension too large");
    total = count;
  }
  if (total > budget) {
    throw BudgetExceeded("covering: " + std::to_string(total) + " points exceed the budget of " +
                         std::to_string(budget));
  }
  return total;
}

double CoveringConfig::effective_spacing() const {
  if (kind == CoveringKind::grid || spacing > 0.0) return spacing;
  return std::pow(domain.volume() / static_cast<double>(count), 1.0 / static_cast<double>(domain.dim()));
}

std::vector<double> covering_points(const CoveringConfig& cfg) {
  const std::size_t n = cfg.planned_size();
  const std::size_t dim = cfg.domain.dim();
  std::vector<double> pts(n * dim);
  if (cfg.kind == CoveringKind::grid) {
    const auto ext = grid_extents(cfg);
    std::vector<std::size_t> idx(dim, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        pts[i * dim + d] = cfg.domain.lo[d] + static_cast<double>(idx[d]) * cfg.spacing;
      }
      // Last coordinate varies fastest.
      for (std::size_t d = dim; d-- > 0;) {
        if (++idx[d] < ext[d]) break;
        idx[d] = 0;
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double u = radical_inverse(i + 1, kPrimes[d]);
        pts[i * dim + d] = cfg.domain.lo[d] + u * (cfg.domain.hi[d] - cfg.domain.lo[d]);
      }
    }
  }
  return pts;
}

void GlobalCertificate::finalize() {
  certified_ids_.clear();
  boundary_ids_.clear();
  const std::size_t dim = embedding.reduced_dim();
  std::vector<double> cpts, bpts;
  for (std::size_t i = 0; i < records.size(); ++i) {
    require(records[i].point.size() == dim, "certificate: record dimension mismatch");
    if (!records[i].certified()) continue;
    certified_ids_.push_back(i);
    cpts.insert(cpts.end(), records[i].point.begin(), records[i].point.end());
    if (records[i].boundary) {
      boundary_ids_.push_back(i);
      bpts.insert(bpts.end(), records[i].point.begin(), records[i].point.end());
    }
  }
  certified_tree_ = KdTree(dim, cpts);
  boundary_tree_ = KdTree(dim, bpts);
}

bool GlobalCertificate::is_member(std::span<const double> x) const {
  if (certified_ids_.empty() || x.size() != embedding.full_dim()) return false;
  const auto z = embedding.reduce(x);
  if (!domain.contains(z)) return false;
  const double residual = embedding.residual2(x);
  const double budget = eps_x * eps_x - residual;
  if (budget < 0.0) return false;
  return certified_tree_.any_within(z, budget);
}

double GlobalCertificate::distance_to_certified(std::span<const double> x) const {
  if (certified_ids_.empty()) return std::numeric_limits<double>::infinity();
  const auto z = embedding.reduce(x);
  const NearestResult hit = certified_tree_.nearest(z);
  const double d = std::sqrt(hit.distance2 + embedding.residual2(x));
  return std::max(0.0, d - eps_x);
}

BoundaryHit GlobalCertificate::nearest_boundary(std::span<const double> x) const {
  require(!boundary_ids_.empty(), "nearest_boundary: certificate has no boundary points");
  const auto z = embedding.reduce(x);
  const NearestResult hit = boundary_tree_.nearest(z);
  BoundaryHit out;
  out.record = boundary_ids_[hit.index];
  out.point = StateVector(records[out.record].point);
  out.distance = std::sqrt(hit.distance2);
  return out;
}

void assign_boundary_flags(GlobalCertificate& cert) {
  const std::size_t dim = cert.domain.dim();
  const std::size_t n = cert.records.size();
  const double s = cert.spacing;
  for (auto& r : cert.records) r.boundary = false;
  if (cert.kind == CoveringKind::grid) {
    CoveringConfig cfg;
    cfg.domain = cert.domain;
    cfg.spacing = s;
    const auto ext = grid_extents(cfg);
    std::size_t total = 1;
    for (std::size_t e : ext) total *= e;
    require(total == n, "certificate: grid records do not match the domain");
    std::vector<std::size_t> stride(dim, 1);
    for (std::size_t d = dim - 1; d-- > 0;) stride[d] = stride[d + 1] * ext[d + 1];
    // Lattice offsets within 1.5 spacings: one or two unit steps.
    std::vector<std::vector<int>> offsets;
    for (std::size_t a = 0; a < dim; ++a) {
      for (int sa : {-1, 1}) {
        std::vector<int> o(dim, 0);
        o[a] = sa;
        offsets.push_back(o);
        for (std::size_t b = a + 1; b < dim; ++b) {
          for (int sb : {-1, 1}) {
            auto o2 = o;
            o2[b] = sb;
            offsets.push_back(o2);
          }
        }
      }
    }
    parallel_for(n, [&](std::size_t i) {
      if (!cert.records[i].certified()) return;
      std::vector<std::size_t> id(dim);
      std::size_t rem = i;
      for (std::size_t d = 0; d < dim; ++d) {
        id[d] = rem / stride[d];
        rem %= stride[d];
      }
      for (const auto& o : offsets) {
        std::size_t j = 0;
        bool inside = true;
        for (std::size_t d = 0; d < dim && inside; ++d) {
          const long v = static_cast<long>(id[d]) + o[d];
          if (v < 0 || v >= static_cast<long>(ext[d])) inside = false;
          else j += static_cast<std::size_t>(v) * stride[d];
        }
        if (!inside || !cert.records[j].certified()) {
          cert.records[i].boundary = true;
          return;
        }
      }
    });
  } else {
    std::vector<double> pts;
    pts.reserve(n * dim);
    for (const auto& r : cert.records) pts.insert(pts.end(), r.point.begin(), r.point.end());
    const KdTree all(dim, pts);
    const double radius2 = (1.5 * s) * (1.5 * s);
    parallel_for(n, [&](std::size_t i) {
      auto& r = cert.records[i];
      if (!r.certified()) return;
      for (std::size_t d = 0; d < dim; ++d) {
        // A neighbor within half a spacing beyond the face would be outside the domain.
        if (r.point[d] - cert.domain.lo[d] < 0.5 * s || cert.domain.hi[d] - r.point[d] < 0.5 * s) {
          r.boundary = true;
          return;
        }
      }
      for (std::size_t j : all.within(r.point, radius2)) {
        if (!cert.records[j].certified()) {
          r.boundary = true;
          return;
        }
      }
    });
  }
}

GlobalCertificate build_certificate(const CoveringConfig& covering, const Embedding& embedding,
                                    const CertificationProblem& problem) {
  require(problem.system && problem.spec && problem.policy && problem.profile, "build_certificate: incomplete problem");
  require(embedding.full_dim() == problem.system->state_dim(), "build_certificate: embedding/system mismatch");
  require(embedding.reduced_dim() == covering.domain.dim(), "build_certificate: covering/embedding mismatch");
  require(problem.eps_x > 0.0, "build_certificate: eps_x must be positive");
  const double spacing = covering.effective_spacing();
  require(spacing > 0.0 && spacing <= 2.0 * problem.eps_x * (1.0 + 1e-12),
          "build_certificate: spacing must not exceed 2*eps_x");
  problem.spec->validate();
  const auto pts = covering_points(covering);
  const std::size_t dim = covering.domain.dim();
  const std::size_t n = pts.size() / dim;

  GlobalCertificate cert;
  cert.system = problem.system->spec().name;
  cert.policy_id = problem.policy->id;
  cert.gamma = problem.spec->gamma;
  cert.horizon = problem.horizon;
  cert.eps_x = problem.eps_x;
  cert.profile_hash = problem.profile->hash();
  cert.kind = covering.kind;
  cert.spacing = spacing;
  cert.domain = covering.domain;
  cert.embedding = embedding;
  cert.records.resize(n);
  parallel_for(n, [&](std::size_t i) {
    auto& r = cert.records[i];
    r.point.assign(pts.begin() + static_cast<std::ptrdiff_t>(i * dim),
                   pts.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
    r.value = certify_point(*problem.spec, *problem.system, *problem.policy, *problem.profile, embedding.lift(r.point),
                            problem.horizon);
  });
  assign_boundary_flags(cert);
  cert.finalize();
  return cert;
}

bool is_member(const GlobalCertificate& cert, const StateVector& x) { return cert.is_member(x.span()); }

StateVector nearest_boundary(const GlobalCertificate& cert, const StateVector& x) {
  return cert.nearest_boundary(x.span()).point;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
void write_list(std::ostream& out, const char* key, const std::vector<T>& values) {
  out << key;
  for (const auto& v : values) {
    if constexpr (std::is_floating_point_v<T>) out << ' ' << fmt(v);
    else out << ' ' << v;
  }
  out << '\n';
}

std::istringstream expect_line(std::istream& in, const std::string& key) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "certificate: truncated file, expected '" + key + "'");
  std::istringstream ls(line);
  std::string k;
  ls >> k;
  require(k == key, "certificate: expected '" + key + "', found '" + k + "'");
  return ls;
}

template <typename T>
std::vector<T> read_list(std::istream& in, const std::string& key) {
  auto ls = expect_line(in, key);
  std::vector<T> v;
  T x;
  while (ls >> x) v.push_back(x);
  return v;
}

constexpr const char* kMagic = "reachcert-certificate v1";

}  // namespace

void write_certificate(std::ostream& out, const GlobalCertificate& cert) {
  out << kMagic << '\n';
  out << "system " << cert.system << '\n';
  out << "policy " << cert.policy_id << '\n';
  out << "gamma " << fmt(cert.gamma) << '\n';
  out << "horizon " << cert.horizon << '\n';
  out << "eps_x " << fmt(cert.eps_x) << '\n';
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016" PRIx64, cert.profile_hash);
  out << "profile_hash " << hash << '\n';
  out << "covering " << (cert.kind == CoveringKind::grid ? "grid" : "halton") << '\n';
  out << "spacing " << fmt(cert.spacing) << '\n';
  out << "full_dim " << cert.embedding.full_dim() << '\n';
  write_list(out, "kept", cert.embedding.kept());
  write_list(out, "context", cert.embedding.context());
  write_list(out, "domain_lo", cert.domain.lo);
  write_list(out, "domain_hi", cert.domain.hi);
  out << "records " << cert.records.size() << '\n';
  for (const auto& r : cert.records) {
    for (double v : r.point) out << fmt(v) << ' ';
    out << fmt(r.value) << ' ' << (r.boundary ? 1 : 0) << '\n';
  }
}

GlobalCertificate read_certificate(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == kMagic, "certificate: bad or missing header");
  GlobalCertificate cert;
  auto rest = [](std::istringstream& ls) {
    std::string v;
    std::getline(ls >> std::ws, v);
    return v;
  };
  {
    auto ls = expect_line(in, "system");
    cert.system = rest(ls);
  }
  {
    auto ls = expect_line(in, "policy");
    cert.policy_id = rest(ls);
  }
  expect_line(in, "gamma") >> cert.gamma;
  expect_line(in, "horizon") >> cert.horizon;
  expect_line(in, "eps_x") >> cert.eps_x;
  {
    auto ls = expect_line(in, "profile_hash");
    std::string h;
    ls >> h;
    cert.profile_hash = std::stoull(h, nullptr, 16);
  }
  {
    auto ls = expect_line(in, "covering");
    std::string k;
    ls >> k;
    require(k == "grid" || k == "halton", "certificate: unknown covering '" + k + "'");
    cert.kind = k == "grid" ? CoveringKind::grid : CoveringKind::halton;
  }
  expect_line(in, "spacing") >> cert.spacing;
  std::size_t full_dim = 0;
  expect_line(in, "full_dim") >> full_dim;
  auto kept = read_list<std::size_t>(in, "kept");
  auto context = read_list<double>(in, "context");
  cert.embedding = Embedding(full_dim, std::move(kept), std::move(context));
  cert.domain.lo = read_list<double>(in, "domain_lo");
  cert.domain.hi = read_list<double>(in, "domain_hi");
  require(cert.domain.dim() == cert.embedding.reduced_dim(), "certificate: domain dimension mismatch");
  std::size_t count = 0;
  expect_line(in, "records") >> count;
  const std::size_t dim = cert.domain.dim();
  cert.records.resize(count);
  for (auto& r : cert.records) {
    r.point.resize(dim);
    for (auto& v : r.point) require(static_cast<bool>(in >> v), "certificate: truncated record");
    int b = 0;
    require(static_cast<bool>(in >> r.value >> b), "certificate: truncated record");
    r.boundary = b != 0;
  }
  cert.finalize();
  return cert;
}

void write_certificate_csv(std::ostream& out, const GlobalCertificate& cert) {
  const std::size_t dim = cert.domain.dim();
  for (std::size_t d = 0; d < dim; ++d) out << 'z' << d << ',';
  out << "value,certified,boundary\n";
  for (const auto& r : cert.records) {
    for (double v : r.point) out << fmt(v) << ',';
    out << fmt(r.value) << ',' << (r.certified() ? 1 : 0) << ',' << (r.boundary ? 1 : 0) << '\n';
  }
}

}  // namespace reachcert
