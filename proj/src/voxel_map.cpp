#include "lro/voxel_map.hpp"

#include <algorithm>
#include <cmath>

namespace lro {

void KdTree3::build(std::vector<Vec3> points) {
  points_ = std::move(points);
  nodes_.clear();
  nodes_.reserve(points_.size());
  std::vector<int> idx(points_.size());
  for (size_t i = 0; i < points_.size(); ++i) idx[i] = static_cast<int>(i);
  root_ = points_.empty() ? -1 : build_recursive(idx, 0, static_cast<int>(idx.size()), 0);
}

int KdTree3::build_recursive(std::vector<int>& idx, int lo, int hi, int depth) {
  if (lo >= hi) return -1;
  const int axis = depth % 3;
  const int mid = (lo + hi) / 2;
  std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi,
                   [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
  Node node;
  node.index = idx[mid];
  node.axis = axis;
  const int self = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  nodes_[self].left = build_recursive(idx, lo, mid, depth + 1);
  nodes_[self].right = build_recursive(idx, mid + 1, hi, depth + 1);
  return self;
}

void KdTree3::search(int node, const Vec3& q, int k,
                     std::vector<std::pair<double, int>>& heap) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  const Vec3& p = points_[n.index];
  const double d2 = (p - q).squaredNorm();
  if (static_cast<int>(heap.size()) < k) {
    heap.emplace_back(d2, n.index);
    std::push_heap(heap.begin(), heap.end());
  } else if (d2 < heap.front().first) {
    std::pop_heap(heap.begin(), heap.end());
    heap.back() = {d2, n.index};
    std::push_heap(heap.begin(), heap.end());
  }
  const double diff = q[n.axis] - p[n.axis];
  const int near = diff < 0.0 ? n.left : n.right;
  const int far = diff < 0.0 ? n.right : n.left;
  search(near, q, k, heap);
  if (static_cast<int>(heap.size()) < k || diff * diff < heap.front().first) {
    search(far, q, k, heap);
  }
}

std::vector<int> KdTree3::knn(const Vec3& q, int k) const {
  std::vector<std::pair<double, int>> heap;
  heap.reserve(k + 1);
  search(root_, q, k, heap);
  std::sort_heap(heap.begin(), heap.end());
  std::vector<int> out;
  out.reserve(heap.size());
  for (const auto& [d2, i] : heap) out.push_back(i);
  return out;
}

std::array<int64_t, 3> VoxelMap::key_of(const Vec3& p) const {
  return {static_cast<int64_t>(std::floor(p.x() / resolution_)),
          static_cast<int64_t>(std::floor(p.y() / resolution_)),
          static_cast<int64_t>(std::floor(p.z() / resolution_))};
}

void VoxelMap::insert(const std::vector<Vec3>& points_world) {
  for (const Vec3& p : points_world) {
    Cell& c = cells_[key_of(p)];
    c.sum += p;
    c.count += 1;
  }
}

Submap VoxelMap::extract_submap(const Vec3& center, double half_width) const {
  std::vector<Vec3> pts;
  for (const auto& [key, cell] : cells_) {
    const Vec3 rep = cell.sum / static_cast<double>(cell.count);
    if ((rep - center).cwiseAbs().maxCoeff() <= half_width) pts.push_back(rep);
  }
  Submap s;
  s.tree.build(std::move(pts));
  return s;
}

std::vector<Vec3> VoxelMap::representatives() const {
  std::vector<Vec3> out;
  out.reserve(cells_.size());
  for (const auto& [key, cell] : cells_) {
    out.push_back(cell.sum / static_cast<double>(cell.count));
  }
  return out;
}

std::vector<Vec3> voxel_thin(const std::vector<Vec3>& points, double resolution) {
  struct Acc {
    Vec3 sum = Vec3::Zero();
    int count = 0;
    int best = -1;     // index of the point nearest the centroid
    double best_d2 = 0.0;
  };
  auto key_of = [&](const Vec3& p) {
    return std::array<int64_t, 3>{static_cast<int64_t>(std::floor(p.x() / resolution)),
                                  static_cast<int64_t>(std::floor(p.y() / resolution)),
                                  static_cast<int64_t>(std::floor(p.z() / resolution))};
  };
  std::unordered_map<std::array<int64_t, 3>, Acc, VoxelKeyHash> cells;
  for (const Vec3& p : points) {
    Acc& a = cells[key_of(p)];
    a.sum += p;
    a.count += 1;
  }
  for (size_t i = 0; i < points.size(); ++i) {
    Acc& a = cells[key_of(points[i])];
    const Vec3 c = a.sum / a.count;
    const double d2 = (points[i] - c).squaredNorm();
    if (a.best < 0 || d2 < a.best_d2) {
      a.best = static_cast<int>(i);
      a.best_d2 = d2;
    }
  }
  // emit in first-seen voxel order so identical inputs give identical outputs
  std::vector<Vec3> out;
  out.reserve(cells.size());
  std::unordered_map<std::array<int64_t, 3>, bool, VoxelKeyHash> emitted;
  for (const Vec3& p : points) {
    auto k = key_of(p);
    if (!emitted[k]) {
      emitted[k] = true;
      out.push_back(points[cells[k].best]);
    }
  }
  return out;
}

}  // namespace lro
