#include "lro/lidar_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Eigenvalues>

namespace lro {

Pose pose_at(const PoseTrack& poses, double t) {
  if (poses.empty()) throw MissingPoseCoverage("empty pose track");
  if (t <= poses.front().first) return poses.front().second;
  if (t >= poses.back().first) return poses.back().second;
  auto it = std::lower_bound(poses.begin(), poses.end(), t,
                             [](const auto& s, double tt) { return s.first < tt; });
  const auto& hi = *it;
  if (hi.first == t) return hi.second;
  const auto& lo = *(it - 1);
  const double alpha = (t - lo.first) / (hi.first - lo.first);
  return interpolate_pose(lo.second, hi.second, alpha);
}

std::vector<LidarPoint> deskew(const LidarScan& scan, const PoseTrack& poses, double target_t,
                               const Pose& T_I_L) {
  if (poses.empty()) throw MissingPoseCoverage("empty pose track");
  const double t_end = scan.t_start + scan.period;
  if (poses.front().first > scan.t_start + 1e-6 || poses.back().first < t_end - 1e-6) {
    throw MissingPoseCoverage("track [" + std::to_string(poses.front().first) + ", " +
                              std::to_string(poses.back().first) + "] vs scan [" +
                              std::to_string(scan.t_start) + ", " + std::to_string(t_end) + "]");
  }
  const Pose T_target_inv = pose_at(poses, target_t).inverse();
  std::vector<LidarPoint> out;
  out.reserve(scan.points.size());
  for (const LidarPoint& pt : scan.points) {
    const Pose T_p = pose_at(poses, scan.t_start + pt.dt);
    LidarPoint d = pt;
    d.position = T_target_inv * (T_p * (T_I_L * pt.position));
    out.push_back(d);
  }
  return out;
}

FeatureCloud extract_features(const std::vector<LidarPoint>& deskewed, double t,
                              const LidarConfig& cfg) {
  FeatureCloud fc;
  fc.t = t;

  std::map<int, std::vector<const LidarPoint*>> rings;
  for (const LidarPoint& p : deskewed) rings[p.ring].push_back(&p);

  const int W = cfg.curvature_window;
  std::vector<Vec3> corners, surfaces, extra;

  for (auto& [ring, pts] : rings) {
    const int n = static_cast<int>(pts.size());
    if (n < 2 * W + 1) continue;

    std::vector<double> curvature(n, -1.0);
    for (int i = W; i < n - W; ++i) {
      Vec3 sum = Vec3::Zero();
      for (int j = -W; j <= W; ++j) {
        if (j != 0) sum += pts[i + j]->position - pts[i]->position;
      }
      curvature[i] = sum.norm() / (2.0 * W * pts[i]->position.norm());
    }

    for (int s = 0; s < cfg.sectors_per_ring; ++s) {
      const int lo = s * n / cfg.sectors_per_ring;
      const int hi = (s + 1) * n / cfg.sectors_per_ring;
      std::vector<int> idx;
      for (int i = std::max(lo, W); i < std::min(hi, n - W); ++i) idx.push_back(i);

      // corners: highest curvature first
      std::sort(idx.begin(), idx.end(),
                [&](int a, int b) { return curvature[a] > curvature[b]; });
      int picked = 0;
      for (int i : idx) {
        if (curvature[i] <= cfg.corner_threshold) break;
        if (picked++ >= cfg.max_corners_per_sector) break;
        corners.push_back(pts[i]->position);
      }

      // surfaces: lowest curvature first
      std::sort(idx.begin(), idx.end(),
                [&](int a, int b) { return curvature[a] < curvature[b]; });
      picked = 0;
      for (int i : idx) {
        if (curvature[i] >= cfg.surface_threshold) break;
        if (picked < cfg.max_surfaces_per_sector) {
          surfaces.push_back(pts[i]->position);
        } else if (cfg.ground_heuristic) {
          extra.push_back(pts[i]->position);
        } else {
          break;
        }
        ++picked;
      }
    }
  }

  fc.corners = voxel_thin(corners, cfg.feature_voxel);
  fc.surfaces = voxel_thin(surfaces, cfg.feature_voxel);
  fc.extra_surfaces = voxel_thin(extra, cfg.feature_voxel);
  return fc;
}

NeighborhoodFit classify_neighborhood(const std::vector<Vec3>& neighbors,
                                      const LidarConfig& cfg) {
  NeighborhoodFit fit;
  const int k = static_cast<int>(neighbors.size());
  if (k < 3) return fit;

  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : neighbors) mean += p;
  mean /= k;
  fit.anchor = mean;

  Mat3 C = Mat3::Zero();
  for (const Vec3& p : neighbors) C += (p - mean) * (p - mean).transpose();
  C /= k;

  Eigen::SelfAdjointEigenSolver<Mat3> eig(C);  // ascending eigenvalues
  const Vec3 ev = eig.eigenvalues();
  const double l_min = std::max(ev(0), 0.0), l_mid = std::max(ev(1), 0.0), l_max = ev(2);

  if (l_mid > 1e-9 * std::max(l_max, 1e-300) && l_min <= cfg.plane_ratio * l_mid) {
    fit.kind = NeighborhoodFit::kPlane;
    fit.axis = eig.eigenvectors().col(0);
    fit.fit_rms = std::sqrt(l_min);
    return fit;
  }
  if (l_max >= cfg.line_ratio * l_mid) {
    fit.kind = NeighborhoodFit::kLine;
    fit.axis = eig.eigenvectors().col(2);
    fit.fit_rms = std::sqrt(l_min + l_mid);
    return fit;
  }
  return fit;
}

namespace {

bool gather_neighbors(const Submap& map, const Vec3& query, double max_dist,
                      std::vector<Vec3>& out) {
  if (map.tree.size() < 5) return false;
  const std::vector<int> idx = map.tree.knn(query, 5);
  if (idx.size() < 5) return false;
  out.clear();
  for (int i : idx) out.push_back(map.tree.points()[i]);
  if ((out.back() - query).norm() > max_dist) return false;
  return true;
}

}  // namespace

CorrespondenceSet find_correspondences(const FeatureCloud& features, const Submap& surface_map,
                                       const Submap& corner_map, const Pose& pose_guess,
                                       const LidarConfig& cfg) {
  CorrespondenceSet out;
  std::vector<Vec3> nb;

  auto try_surface = [&](const Vec3& f, bool ground_only) {
    const Vec3 w = pose_guess * f;
    if (!gather_neighbors(surface_map, w, cfg.max_corr_dist, nb)) return;
    const NeighborhoodFit fit = classify_neighborhood(nb, cfg);
    if (fit.kind != NeighborhoodFit::kPlane || fit.fit_rms > cfg.fit_gate) return;
    if (ground_only && std::abs(fit.axis.z()) < cfg.ground_normal_gate) return;
    out.planes.push_back({f, fit.anchor, fit.axis});
  };

  for (const Vec3& f : features.surfaces) try_surface(f, false);
  if (cfg.ground_heuristic) {
    for (const Vec3& f : features.extra_surfaces) try_surface(f, true);
  }

  for (const Vec3& f : features.corners) {
    const Vec3 w = pose_guess * f;
    if (!gather_neighbors(corner_map, w, cfg.max_corr_dist, nb)) continue;
    const NeighborhoodFit fit = classify_neighborhood(nb, cfg);
    if (fit.kind != NeighborhoodFit::kLine || fit.fit_rms > cfg.fit_gate) continue;
    out.lines.push_back({f, fit.anchor, fit.axis});
  }
  return out;
}

void FeatureMaps::update(const FeatureCloud& features, const Pose& T_W_I) {
  std::vector<Vec3> w;
  w.reserve(features.corners.size());
  for (const Vec3& p : features.corners) w.push_back(T_W_I * p);
  corners_.insert(w);

  w.clear();
  for (const Vec3& p : features.surfaces) w.push_back(T_W_I * p);
  for (const Vec3& p : features.extra_surfaces) w.push_back(T_W_I * p);
  surfaces_.insert(w);
}

}  // namespace lro
