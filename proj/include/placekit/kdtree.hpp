#pragma once

#include "placekit/types.hpp"

#include <cstddef>
#include <vector>

namespace placekit {

/// Static 3D KD-tree over a point set. Query results are deterministic:
/// radius results come back sorted by index, k-NN ties break to the lower index.
class KdTree3 {
 public:
  KdTree3() = default;
  explicit KdTree3(const std::vector<Vec3>& points) { build(points); }

  void build(const std::vector<Vec3>& points);

  bool empty() const { return pts_.empty(); }
  std::size_t size() const { return pts_.size(); }

  /// Indices of points with ||p - q|| <= radius, ascending index order.
  std::vector<int> radius_search(const Vec3& q, double radius) const;

  /// Indices of the k nearest points ordered by (distance, index). If
  /// exclude_index >= 0 that point is skipped (self-queries).
  std::vector<int> knn(const Vec3& q, int k, int exclude_index = -1) const;

  /// Squared distance to the nearest point, or +inf for an empty tree.
  double nearest_dist2(const Vec3& q) const;

 private:
  struct Node {
    int left = -1;
    int right = -1;
    int begin = 0;  // leaf range in order_
    int end = 0;
    int axis = 0;
    double split = 0.0;
    Vec3 lo, hi;  // bounding box of the subtree
  };

  int build_range(int begin, int end);
  void radius_rec(int node, const Vec3& q, double r2, std::vector<int>& out) const;
  void knn_rec(int node, const Vec3& q, int k, int exclude,
               std::vector<std::pair<double, int>>& heap) const;

  std::vector<Vec3> pts_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
  static constexpr int kLeafSize = 16;
};

}  // namespace placekit
