#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace reachcert {

struct NearestResult {
  std::size_t index = std::numeric_limits<std::size_t>::max();  // original point index
  double distance2 = std::numeric_limits<double>::infinity();    // squared Euclidean distance

  bool found() const { return index != std::numeric_limits<std::size_t>::max(); }
};

/// Exact k-d tree. Points are stored coordinate-major in tree order so each
/// leaf bucket is scanned by the vector distance kernel. Queries return the
/// same distances as a linear scan that accumulates (p_d - q_d)^2 in
/// coordinate order.
class KdTree {
 public:
  KdTree() = default;
  /// `points` holds count*dim values, point-major (point i at [i*dim, (i+1)*dim)).
  KdTree(std::size_t dim, std::span<const double> points, std::size_t leaf_size = 16);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }

  /// Nearest point; ties go to the lowest original index.
  NearestResult nearest(std::span<const double> q) const;
  /// True iff some point satisfies |p - q|^2 <= radius2.
  bool any_within(std::span<const double> q, double radius2) const;
  /// Original indices with |p - q|^2 <= radius2, ascending.
  std::vector<std::size_t> within(std::span<const double> q, double radius2) const;

  /// Coordinate `d` of original point `i`.
  double coordinate(std::size_t i, std::size_t d) const { return points_[i * dim_ + d]; }

 private:
  struct Node {
    std::size_t begin = 0, end = 0;  // range in tree order
    int axis = -1;                   // -1 marks a leaf
    double split = 0.0;
    std::size_t left = 0, right = 0;
    std::vector<double> lo, hi;      // bounding box
  };

  std::size_t build(std::size_t begin, std::size_t end);
  double box_distance2(const Node& n, std::span<const double> q) const;
  void leaf_distances(const Node& n, std::span<const double> q, double* out) const;

  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  std::size_t leaf_size_ = 16;
  std::vector<double> points_;   // original, point-major
  std::vector<std::size_t> order_;  // tree position -> original index
  std::vector<double> soa_;      // coordinate-major in tree order: soa_[d*count_ + pos]
  std::vector<Node> nodes_;
};

/// Reference linear scans used to check the tree.
NearestResult linear_nearest(std::size_t dim, std::span<const double> points, std::span<const double> q);
std::vector<std::size_t> linear_within(std::size_t dim, std::span<const double> points, std::span<const double> q,
                                       double radius2);

}  // namespace reachcert
