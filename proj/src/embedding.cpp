#include "reachcert/embedding.hpp"

#include <algorithm>

namespace reachcert {

Embedding::Embedding(std::size_t full_dim, std::vector<std::size_t> kept, std::vector<double> context)
    : full_dim_(full_dim), kept_(std::move(kept)), context_(std::move(context)) {
  require(full_dim_ >= 1 && !kept_.empty(), "embedding: empty coordinate set");
  require(context_.size() == full_dim_, "embedding: context must have full dimension");
  std::vector<bool> seen(full_dim_, false);
  for (std::size_t i : kept_) {
    require(i < full_dim_ && !seen[i], "embedding: kept indices must be distinct and in range");
    seen[i] = true;
  }
  for (std::size_t i = 0; i < full_dim_; ++i) {
    if (!seen[i]) dropped_.push_back(i);
  }
}

Embedding Embedding::identity(std::size_t dim) {
  std::vector<std::size_t> kept(dim);
  for (std::size_t i = 0; i < dim; ++i) kept[i] = i;
  return Embedding(dim, std::move(kept), std::vector<double>(dim, 0.0));
}

std::vector<double> Embedding::reduce(std::span<const double> x) const {
  require(x.size() == full_dim_, "embedding: full-state dimension mismatch");
  std::vector<double> z(kept_.size());
  for (std::size_t j = 0; j < kept_.size(); ++j) z[j] = x[kept_[j]];
  return z;
}

StateVector Embedding::lift(std::span<const double> z) const {
  require(z.size() == kept_.size(), "embedding: reduced dimension mismatch");
  StateVector x(context_);
  for (std::size_t j = 0; j < kept_.size(); ++j) x[kept_[j]] = z[j];
  return x;
}

double Embedding::residual2(std::span<const double> x) const {
  require(x.size() == full_dim_, "embedding: full-state dimension mismatch");
  double s = 0.0;
  for (std::size_t i : dropped_) {
    const double d = x[i] - context_[i];
    s += d * d;
  }
  return s;
}

Embedding Embedding::with_context_of(std::span<const double> x) const {
  require(x.size() == full_dim_, "embedding: full-state dimension mismatch");
  std::vector<double> ctx(x.begin(), x.end());
  return Embedding(full_dim_, kept_, std::move(ctx));
}

}  // namespace reachcert
