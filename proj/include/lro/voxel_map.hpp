#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "lro/geometry.hpp"

namespace lro {

/// Static 3D k-d tree over a point set, built once per submap extraction.
class KdTree3 {
 public:
  KdTree3() = default;
  explicit KdTree3(std::vector<Vec3> points) { build(std::move(points)); }

  void build(std::vector<Vec3> points);

  /// Indices of the k nearest points to q, closest first.
  std::vector<int> knn(const Vec3& q, int k) const;

  const std::vector<Vec3>& points() const { return points_; }
  bool empty() const { return points_.empty(); }
  size_t size() const { return points_.size(); }

 private:
  struct Node {
    int index = -1;   // point stored at this node
    int axis = 0;
    int left = -1;
    int right = -1;
  };
  int build_recursive(std::vector<int>& idx, int lo, int hi, int depth);
  void search(int node, const Vec3& q, int k,
              std::vector<std::pair<double, int>>& heap) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

struct VoxelKeyHash {
  size_t operator()(const std::array<int64_t, 3>& k) const {
    size_t h = 1469598103934665603ull;
    for (int64_t v : k) {
      h ^= static_cast<size_t>(v);
      h *= 1099511628211ull;
    }
    return h;
  }
};

/// Extracted local map slice with its spatial index.
struct Submap {
  KdTree3 tree;
};

/// Fixed-resolution world-frame feature map. One representative per voxel,
/// the running centroid of every point ever inserted into it.
class VoxelMap {
 public:
  explicit VoxelMap(double resolution = 0.2) : resolution_(resolution) {}

  void insert(const std::vector<Vec3>& points_world);

  /// All representatives within the axis-aligned cube of the given
  /// half-width centered at `center`, indexed with a fresh k-d tree.
  Submap extract_submap(const Vec3& center, double half_width) const;

  std::vector<Vec3> representatives() const;
  size_t voxel_count() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }

 private:
  struct Cell {
    Vec3 sum = Vec3::Zero();
    uint32_t count = 0;
  };
  std::array<int64_t, 3> key_of(const Vec3& p) const;

  double resolution_;
  std::unordered_map<std::array<int64_t, 3>, Cell, VoxelKeyHash> cells_;
};

/// Keep one point per voxel: the input point closest to its voxel centroid.
/// Used for feature-cloud thinning, where representatives must stay actual
/// measured points.
std::vector<Vec3> voxel_thin(const std::vector<Vec3>& points, double resolution);

}  // namespace lro
