#pragma once

#include <optional>
#include <vector>

#include "lro/factors.hpp"
#include "lro/sensor_types.hpp"
#include "lro/voxel_map.hpp"

namespace lro {

struct LidarConfig {
  // LOAM-style curvature selection
  int curvature_window = 5;        // neighbors per side along the ring
  double corner_threshold = 1.0;
  double surface_threshold = 0.1;
  int sectors_per_ring = 6;
  int max_corners_per_sector = 2;
  int max_surfaces_per_sector = 4;
  double feature_voxel = 0.2;      // thinning resolution for feature clouds

  // correspondence search
  double plane_ratio = 0.33;       // accept plane when l3 <= ratio * l2
  double line_ratio = 3.0;         // accept line when l1 >= ratio * l2
  double fit_gate = 0.1;           // m, RMS of neighbors about the fitted model
  double max_corr_dist = 1.0;      // m, farthest of the 5 neighbors

  // map maintenance
  double map_resolution = 0.2;
  double max_range = 50.0;
  double submap_half_width = 50.0;

  // fog-mode heuristic: ground planes bypass the sector quota
  bool ground_heuristic = false;
  double ground_normal_gate = 0.9;  // |n_z| above this counts as ground
};

struct FeatureCloud {
  std::vector<Vec3> corners;         // frame I at the deskew target time
  std::vector<Vec3> surfaces;
  std::vector<Vec3> extra_surfaces;  // over-quota candidates, ground heuristic only
  double t = 0.0;
};

/// Pose samples bracketing a scan, time-ordered, as (t, T_W_I).
using PoseTrack = std::vector<std::pair<double, Pose>>;

/// Motion compensation: every point is mapped to where it would have been
/// measured at target_t, expressed in frame I at target_t. Ring/dt metadata
/// is preserved for feature extraction. Throws MissingPoseCoverage.
std::vector<LidarPoint> deskew(const LidarScan& scan, const PoseTrack& poses, double target_t,
                               const Pose& T_I_L);

/// Pose at time t by interpolation inside the track (constant twist between
/// neighboring samples).
Pose pose_at(const PoseTrack& poses, double t);

FeatureCloud extract_features(const std::vector<LidarPoint>& deskewed, double t,
                              const LidarConfig& cfg);

struct NeighborhoodFit {
  enum Kind { kPlane, kLine, kInvalid } kind = kInvalid;
  Vec3 anchor = Vec3::Zero();  // mean of the neighbors
  Vec3 axis = Vec3::Zero();    // plane normal or line direction (unit)
  double fit_rms = 0.0;        // RMS distance of the neighbors to the model
};

/// Eigen-analysis of a 5-point neighborhood.
NeighborhoodFit classify_neighborhood(const std::vector<Vec3>& neighbors,
                                      const LidarConfig& cfg);

struct CorrespondenceSet {
  std::vector<PlaneCorrespondence> planes;
  std::vector<LineCorrespondence> lines;
};

CorrespondenceSet find_correspondences(const FeatureCloud& features, const Submap& surface_map,
                                       const Submap& corner_map, const Pose& pose_guess,
                                       const LidarConfig& cfg);

/// Global corner + surface maps with submap extraction.
class FeatureMaps {
 public:
  explicit FeatureMaps(const LidarConfig& cfg)
      : corners_(cfg.map_resolution), surfaces_(cfg.map_resolution) {}

  void update(const FeatureCloud& features, const Pose& T_W_I);
  Submap corner_submap(const Vec3& center, double half_width) const {
    return corners_.extract_submap(center, half_width);
  }
  Submap surface_submap(const Vec3& center, double half_width) const {
    return surfaces_.extract_submap(center, half_width);
  }
  const VoxelMap& corners() const { return corners_; }
  const VoxelMap& surfaces() const { return surfaces_; }

 private:
  VoxelMap corners_;
  VoxelMap surfaces_;
};

}  // namespace lro
