#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace reachcert {

/// Raised when a caller breaks an operation's precondition (dimension
/// mismatch, parameter out of range, non-finite input).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation would exceed its configured budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& message);

enum class Unit { meter, meter_per_second, meter_per_second_sq, dimensionless };

const char* unit_symbol(Unit unit);

namespace detail {

// Shared storage for the state/control strong types.
template <typename Tag>
class RealVector {
 public:
  RealVector() = default;
  explicit RealVector(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  explicit RealVector(std::vector<double> values) : values_(std::move(values)) {}
  RealVector(std::initializer_list<double> values) : values_(values) {}

  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  bool all_finite() const {
    for (double v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const RealVector&, const RealVector&) = default;

 private:
  std::vector<double> values_;
};

struct StateTag {};
struct ControlTag {};

}  // namespace detail

using StateVector = detail::RealVector<detail::StateTag>;
using ControlVector = detail::RealVector<detail::ControlTag>;

double norm2(std::span<const double> v);
double distance2(std::span<const double> a, std::span<const double> b);
double max_abs(std::span<const double> v);

/// Axis-aligned box [lo, hi].
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const { return lo.size(); }
  bool contains(std::span<const double> x) const;
  std::vector<double> center() const;
  double volume() const;
  /// Throws ContractViolation if dimensions disagree or any side has zero width.
  void validate_nondegenerate() const;
  std::vector<double> sample(std::mt19937_64& rng) const;
};

/// States and controls of one rollout; states.size() == controls.size() + 1.
struct Trajectory {
  std::vector<StateVector> states;
  std::vector<ControlVector> controls;
  double dt = 0.0;

  std::size_t horizon() const { return controls.size(); }
};

/// Column-major batch of `count` vectors of length `dim`, stored as `dim`
/// contiguous rows so kernels can work across the batch.
class StateBatch {
 public:
  StateBatch() = default;
  StateBatch(std::size_t dim, std::size_t count) : dim_(dim), count_(count), data_(dim * count, 0.0) {}

  std::size_t dim() const { return dim_; }
  std::size_t count() const { return count_; }

  double* row(std::size_t i) { return data_.data() + i * count_; }
  const double* row(std::size_t i) const { return data_.data() + i * count_; }
  double& at(std::size_t i, std::size_t k) { return data_[i * count_ + k]; }
  double at(std::size_t i, std::size_t k) const { return data_[i * count_ + k]; }

  void set_column(std::size_t k, std::span<const double> v);
  void get_column(std::size_t k, std::span<double> out) const;
  std::vector<double> column(std::size_t k) const;
  void fill_columns(std::span<const double> v);

 private:
  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  std::vector<double> data_;
};

/// splitmix64 finalizer; derives independent substream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Uniform sample from the closed Euclidean ball of radius `radius` about `center`
/// (direction from a normalized Gaussian, radius by inverse CDF).
std::vector<double> sample_ball(std::span<const double> center, double radius, std::mt19937_64& rng);

/// 64-bit FNV-1a over a byte string.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace reachcert
