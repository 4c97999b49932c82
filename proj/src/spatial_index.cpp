#include "reachcert/spatial_index.hpp"

#include <algorithm>
#include <numeric>

#include "reachcert/core.hpp"
#include "reachcert/kernels.hpp"

namespace reachcert {

KdTree::KdTree(std::size_t dim, std::span<const double> points, std::size_t leaf_size)
    : dim_(dim), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  require(dim >= 1, "KdTree: dimension must be >= 1");
  require(points.size() % dim == 0, "KdTree: point buffer is not a multiple of dim");
  count_ = points.size() / dim;
  points_.assign(points.begin(), points.end());
  order_.resize(count_);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (count_ == 0) return;
  nodes_.reserve(2 * (count_ / leaf_size_ + 1));
  build(0, count_);
  soa_.resize(dim_ * count_);
  for (std::size_t pos = 0; pos < count_; ++pos) {
    for (std::size_t d = 0; d < dim_; ++d) soa_[d * count_ + pos] = points_[order_[pos] * dim_ + d];
  }
}

std::size_t KdTree::build(std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.emplace_back();
  Node node;
  node.begin = begin;
  node.end = end;
  node.lo.assign(dim_, std::numeric_limits<double>::infinity());
  node.hi.assign(dim_, -std::numeric_limits<double>::infinity());
  for (std::size_t pos = begin; pos < end; ++pos) {
    for (std::size_t d = 0; d < dim_; ++d) {
      const double v = points_[order_[pos] * dim_ + d];
      node.lo[d] = std::min(node.lo[d], v);
      node.hi[d] = std::max(node.hi[d], v);
    }
  }
  if (end - begin > leaf_size_) {
    std::size_t axis = 0;
    double spread = -1.0;
    for (std::size_t d = 0; d < dim_; ++d) {
      if (node.hi[d] - node.lo[d] > spread) {
        spread = node.hi[d] - node.lo[d];
        axis = d;
      }
    }
    if (spread > 0.0) {
      const std::size_t mid = begin + (end - begin) / 2;
      std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                       order_.begin() + static_cast<std::ptrdiff_t>(mid),
                       order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                         const double va = points_[a * dim_ + axis], vb = points_[b * dim_ + axis];
                         return va < vb || (va == vb && a < b);
                       });
      node.axis = static_cast<int>(axis);
      node.split = points_[order_[mid] * dim_ + axis];
      node.left = build(begin, mid);
      node.right = build(mid, end);
    }
  }
  nodes_[id] = std::move(node);
  return id;
}

double KdTree::box_distance2(const Node& n, std::span<const double> q) const {
  double s = 0.0;
  for (std::size_t d = 0; d < dim_; ++d) {
    double diff = 0.0;
    if (q[d] < n.lo[d]) diff = n.lo[d] - q[d];
    else if (q[d] > n.hi[d]) diff = q[d] - n.hi[d];
    s += diff * diff;
  }
  return s;
}

void KdTree::leaf_distances(const Node& n, std::span<const double> q, double* out) const {
  kernels::active().squared_distances(soa_.data() + n.begin, count_, n.end - n.begin, dim_, q.data(), out);
}

NearestResult KdTree::nearest(std::span<const double> q) const {
  require(q.size() == dim_, "KdTree::nearest: query dimension mismatch");
  NearestResult best;
  if (count_ == 0) return best;
  thread_local std::vector<double> buffer;
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const Node& n = nodes_[stack.back()];
    stack.pop_back();
    if (box_distance2(n, q) > best.distance2) continue;
    if (n.axis < 0) {
      buffer.resize(n.end - n.begin);
      leaf_distances(n, q, buffer.data());
      for (std::size_t k = 0; k < buffer.size(); ++k) {
        const std::size_t idx = order_[n.begin + k];
        if (buffer[k] < best.distance2 || (buffer[k] == best.distance2 && idx < best.index)) {
          best.distance2 = buffer[k];
          best.index = idx;
        }
      }
      continue;
    }
    // Push the far child first so the near one is explored first.
    const bool go_left = q[static_cast<std::size_t>(n.axis)] < n.split;
    stack.push_back(go_left ? n.right : n.left);
    stack.push_back(go_left ? n.left : n.right);
  }
  return best;
}

bool KdTree::any_within(std::span<const double> q, double radius2) const {
  require(q.size() == dim_, "KdTree::any_within: query dimension mismatch");
  if (count_ == 0 || !(radius2 >= 0.0)) return false;
  thread_local std::vector<double> buffer;
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const Node& n = nodes_[stack.back()];
    stack.pop_back();
    if (box_distance2(n, q) > radius2) continue;
    if (n.axis < 0) {
      buffer.resize(n.end - n.begin);
      leaf_distances(n, q, buffer.data());
      for (double d2 : buffer) {
        if (d2 <= radius2) return true;
      }
      continue;
    }
    const bool go_left = q[static_cast<std::size_t>(n.axis)] < n.split;
    stack.push_back(go_left ? n.right : n.left);
    stack.push_back(go_left ? n.left : n.right);
  }
  return false;
}

std::vector<std::size_t> KdTree::within(std::span<const double> q, double radius2) const {
  require(q.size() == dim_, "KdTree::within: query dimension mismatch");
  std::vector<std::size_t> out;
  if (count_ == 0 || !(radius2 >= 0.0)) return out;
  std::vector<double> buffer;
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const Node& n = nodes_[stack.back()];
    stack.pop_back();
    if (box_distance2(n, q) > radius2) continue;
    if (n.axis < 0) {
      buffer.resize(n.end - n.begin);
      leaf_distances(n, q, buffer.data());
      for (std::size_t k = 0; k < buffer.size(); ++k) {
        if (buffer[k] <= radius2) out.push_back(order_[n.begin + k]);
      }
      continue;
    }
    stack.push_back(n.left);
    stack.push_back(n.right);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

double scan_distance2(const double* p, std::span<const double> q) {
  double acc = 0.0;
  for (std::size_t d = 0; d < q.size(); ++d) {
    const double diff = p[d] - q[d];
    acc = acc + diff * diff;
  }
  return acc;
}

}  // namespace

NearestResult linear_nearest(std::size_t dim, std::span<const double> points, std::span<const double> q) {
  require(q.size() == dim, "linear_nearest: query dimension mismatch");
  NearestResult best;
  for (std::size_t i = 0; i * dim < points.size(); ++i) {
    const double d2 = scan_distance2(points.data() + i * dim, q);
    if (d2 < best.distance2) {
      best.distance2 = d2;
      best.index = i;
    }
  }
  return best;
}

std::vector<std::size_t> linear_within(std::size_t dim, std::span<const double> points, std::span<const double> q,
                                       double radius2) {
  require(q.size() == dim, "linear_within: query dimension mismatch");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i * dim < points.size(); ++i) {
    if (scan_distance2(points.data() + i * dim, q) <= radius2) out.push_back(i);
  }
  return out;
}

}  // namespace reachcert
