#include "placekit/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace placekit {

void KdTree3::build(const std::vector<Vec3>& points) {
  pts_ = points;
  order_.resize(pts_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.clear();
  nodes_.reserve(pts_.empty() ? 1 : 2 * pts_.size() / kLeafSize + 4);
  root_ = pts_.empty() ? -1 : build_range(0, static_cast<int>(pts_.size()));
}

int KdTree3::build_range(int begin, int end) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  node.hi = -node.lo;
  for (int i = begin; i < end; ++i) {
    const Vec3& p = pts_[order_[i]];
    node.lo = node.lo.cwiseMin(p);
    node.hi = node.hi.cwiseMax(p);
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) {
    return id;
  }
  const Vec3 extent = node.hi - node.lo;
  int axis = 0;
  if (extent.y() > extent.x()) axis = 1;
  if (extent.z() > extent[axis]) axis = 2;
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     if (pts_[a][axis] != pts_[b][axis]) return pts_[a][axis] < pts_[b][axis];
                     return a < b;
                   });
  const double split = pts_[order_[mid]][axis];
  const int left = build_range(begin, mid);
  const int right = build_range(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

static double box_dist2(const Vec3& lo, const Vec3& hi, const Vec3& q) {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    double d = 0.0;
    if (q[a] < lo[a]) d = lo[a] - q[a];
    else if (q[a] > hi[a]) d = q[a] - hi[a];
    d2 += d * d;
  }
  return d2;
}

std::vector<int> KdTree3::radius_search(const Vec3& q, double radius) const {
  std::vector<int> out;
  if (root_ < 0 || radius < 0.0) return out;
  radius_rec(root_, q, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

void KdTree3::radius_rec(int node, const Vec3& q, double r2, std::vector<int>& out) const {
  const Node& n = nodes_[node];
  if (box_dist2(n.lo, n.hi, q) > r2) return;
  if (n.left < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int idx = order_[i];
      if ((pts_[idx] - q).squaredNorm() <= r2) out.push_back(idx);
    }
    return;
  }
  radius_rec(n.left, q, r2, out);
  radius_rec(n.right, q, r2, out);
}

std::vector<int> KdTree3::knn(const Vec3& q, int k, int exclude_index) const {
  std::vector<std::pair<double, int>> heap;  // max-heap by (dist2, index)
  if (root_ >= 0 && k > 0) {
    heap.reserve(static_cast<std::size_t>(k) + 1);
    knn_rec(root_, q, k, exclude_index, heap);
  }
  std::sort(heap.begin(), heap.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  });
  std::vector<int> out;
  out.reserve(heap.size());
  for (const auto& [d2, idx] : heap) out.push_back(idx);
  return out;
}

void KdTree3::knn_rec(int node, const Vec3& q, int k, int exclude,
                      std::vector<std::pair<double, int>>& heap) const {
  const Node& n = nodes_[node];
  const auto cmp = [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;  // on equal distance, larger index is "worse"
  };
  const double worst = heap.size() == static_cast<std::size_t>(k)
                           ? heap.front().first
                           : std::numeric_limits<double>::infinity();
  if (box_dist2(n.lo, n.hi, q) > worst) return;
  if (n.left < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int idx = order_[i];
      if (idx == exclude) continue;
      const double d2 = (pts_[idx] - q).squaredNorm();
      const std::pair<double, int> cand{d2, idx};
      if (heap.size() < static_cast<std::size_t>(k)) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), cmp);
      } else if (cmp(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), cmp);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), cmp);
      }
    }
    return;
  }
  // Descend the nearer child first.
  const int axis = n.axis;
  const int first = q[axis] <= n.split ? n.left : n.right;
  const int second = first == n.left ? n.right : n.left;
  knn_rec(first, q, k, exclude, heap);
  knn_rec(second, q, k, exclude, heap);
}

double KdTree3::nearest_dist2(const Vec3& q) const {
  const auto nn = knn(q, 1);
  if (nn.empty()) return std::numeric_limits<double>::infinity();
  return (pts_[nn[0]] - q).squaredNorm();
}

}  // namespace placekit
