#include "reachcert/core.hpp"

#include <algorithm>
#include <numeric>

namespace reachcert {

void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

const char* unit_symbol(Unit unit) {
  switch (unit) {
    case Unit::meter:
      return "m";
    case Unit::meter_per_second:
      return "m/s";
    case Unit::meter_per_second_sq:
      return "m/s^2";
    case Unit::dimensionless:
      return "1";
  }
  return "?";
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double distance2(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "distance2: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

bool Box::contains(std::span<const double> x) const {
  if (x.size() != lo.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  }
  return true;
}

std::vector<double> Box::center() const {
  std::vector<double> c(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
  return c;
}

double Box::volume() const {
  double v = 1.0;
  for (std::size_t i = 0; i < lo.size(); ++i) v *= (hi[i] - lo[i]);
  return v;
}

void Box::validate_nondegenerate() const {
  require(!lo.empty() && lo.size() == hi.size(), "box: lo/hi dimension mismatch");
  for (std::size_t i = 0; i < lo.size(); ++i) {
    require(std::isfinite(lo[i]) && std::isfinite(hi[i]), "box: non-finite bound");
    require(hi[i] > lo[i], "box: degenerate side " + std::to_string(i));
  }
}

std::vector<double> Box::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) x[i] = lo[i] + (hi[i] - lo[i]) * u(rng);
  return x;
}

void StateBatch::set_column(std::size_t k, std::span<const double> v) {
  require(v.size() == dim_ && k < count_, "StateBatch::set_column: bad shape");
  for (std::size_t i = 0; i < dim_; ++i) data_[i * count_ + k] = v[i];
}

void StateBatch::get_column(std::size_t k, std::span<double> out) const {
  for (std::size_t i = 0; i < dim_; ++i) out[i] = data_[i * count_ + k];
}

std::vector<double> StateBatch::column(std::size_t k) const {
  std::vector<double> v(dim_);
  get_column(k, v);
  return v;
}

void StateBatch::fill_columns(std::span<const double> v) {
  require(v.size() == dim_, "StateBatch::fill_columns: bad shape");
  for (std::size_t i = 0; i < dim_; ++i) std::fill_n(data_.begin() + i * count_, count_, v[i]);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<double> sample_ball(std::span<const double> center, double radius, std::mt19937_64& rng) {
  const std::size_t n = center.size();
  std::vector<double> x(center.begin(), center.end());
  if (radius <= 0.0) return x;
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> dir(n);
  double len = 0.0;
  do {
    for (auto& d : dir) d = g(rng);
    len = norm2(dir);
  } while (len < 1e-300);
  const double rho = radius * std::pow(u(rng), 1.0 / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) x[i] += rho * dir[i] / len;
  return x;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace reachcert
