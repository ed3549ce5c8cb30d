// Static 3-D KD-tree with deterministic queries: nearest-neighbour ties are
// broken by the smallest point index, so results are reproducible and can be
// checked exactly against a brute-force search.

#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "limoco/geom.hpp"

namespace limoco {

struct Neighbour {
  double dist_sq = 0.0;
  std::size_t index = 0;

  bool operator<(const Neighbour& o) const {
    if (dist_sq != o.dist_sq) return dist_sq < o.dist_sq;
    return index < o.index;
  }
};

class KdTree3 {
 public:
  KdTree3() = default;

  explicit KdTree3(std::vector<Vec3> points, int leaf_size = 16)
      : points_(std::move(points)), leaf_size_(leaf_size < 1 ? 1 : leaf_size) {
    order_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    if (!points_.empty()) {
      nodes_.reserve(2 * points_.size() / static_cast<std::size_t>(leaf_size_) + 2);
      build(0, points_.size());
    }
  }

  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  /// k nearest neighbours of q, sorted by (distance, index).
  std::vector<Neighbour> knn(const Vec3& q, std::size_t k) const {
    std::vector<Neighbour> heap;  // max-heap on (dist_sq, index)
    if (k == 0 || points_.empty()) return heap;
    heap.reserve(k + 1);
    if (!nodes_.empty()) search_knn(0, q, k, heap);
    std::sort_heap(heap.begin(), heap.end());
    return heap;
  }

  /// All neighbours with distance <= r, sorted by index.
  std::vector<std::size_t> radius(const Vec3& q, double r) const {
    std::vector<std::size_t> out;
    if (points_.empty()) return out;
    search_radius(0, q, r * r, out);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  struct Node {
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    std::size_t begin = 0, end = 0;  // leaf range in order_
    int left = -1, right = -1;
  };

  int build(std::size_t begin, std::size_t end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    if (end - begin <= static_cast<std::size_t>(leaf_size_)) {
      nodes_[id].begin = begin;
      nodes_[id].end = end;
      return id;
    }

    Vec3 lo = points_[order_[begin]], hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                       const double pa = points_[a][axis], pb = points_[b][axis];
                       if (pa != pb) return pa < pb;
                       return a < b;
                     });

    nodes_[id].axis = axis;
    nodes_[id].split = points_[order_[mid]][axis];
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void consider(const Vec3& q, std::size_t idx, std::size_t k,
                std::vector<Neighbour>& heap) const {
    const Neighbour cand{(points_[idx] - q).squaredNorm(), idx};
    if (heap.size() < k) {
      heap.push_back(cand);
      std::push_heap(heap.begin(), heap.end());
    } else if (cand < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = cand;
      std::push_heap(heap.begin(), heap.end());
    }
  }

  void search_knn(int node_id, const Vec3& q, std::size_t k,
                  std::vector<Neighbour>& heap) const {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) consider(q, order_[i], k, heap);
      return;
    }
    const double d = q[node.axis] - node.split;
    const int near = d < 0.0 ? node.left : node.right;
    const int far = d < 0.0 ? node.right : node.left;
    search_knn(near, q, k, heap);
    // Equal axis distances may hide an equally-near, smaller-index point in
    // the far branch, so prune only on strict inequality.
    if (heap.size() < k || d * d <= heap.front().dist_sq) {
      search_knn(far, q, k, heap);
    }
  }

  void search_radius(int node_id, const Vec3& q, double r_sq,
                     std::vector<std::size_t>& out) const {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        if ((points_[idx] - q).squaredNorm() <= r_sq) out.push_back(idx);
      }
      return;
    }
    const double d = q[node.axis] - node.split;
    const int near = d < 0.0 ? node.left : node.right;
    const int far = d < 0.0 ? node.right : node.left;
    search_radius(near, q, r_sq, out);
    if (d * d <= r_sq) search_radius(far, q, r_sq, out);
  }

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  int leaf_size_ = 16;
};

}  // namespace limoco
