#pragma once

#include <span>
#include <vector>

#include "reachcert/core.hpp"

namespace reachcert {

/// Coordinate reduction used by certificates: z = x[kept], and the dropped
/// coordinates are pinned to `context` when lifting back. Distances between
/// lifted points equal distances between their reduced coordinates, so a
/// ball test in the full space splits into a reduced-coordinate test plus the
/// squared residual of the dropped coordinates.
class Embedding {
 public:
  Embedding() = default;
  Embedding(std::size_t full_dim, std::vector<std::size_t> kept, std::vector<double> context);
  static Embedding identity(std::size_t dim);

  std::size_t full_dim() const { return full_dim_; }
  std::size_t reduced_dim() const { return kept_.size(); }
  const std::vector<std::size_t>& kept() const { return kept_; }
  const std::vector<double>& context() const { return context_; }
  bool is_identity() const { return kept_.size() == full_dim_; }

  std::vector<double> reduce(std::span<const double> x) const;
  StateVector lift(std::span<const double> z) const;
  /// Sum of squared differences between x's dropped coordinates and the context.
  double residual2(std::span<const double> x) const;
  /// Same reduction with the context replaced by x's own dropped coordinates.
  Embedding with_context_of(std::span<const double> x) const;

 private:
  std::size_t full_dim_ = 0;
  std::vector<std::size_t> kept_;
  std::vector<double> context_;  // full_dim entries; kept positions unused
  std::vector<std::size_t> dropped_;
};

}  // namespace reachcert
