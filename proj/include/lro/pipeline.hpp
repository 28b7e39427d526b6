#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lro/graph.hpp"
#include "lro/io.hpp"
#include "lro/lidar_pipeline.hpp"
#include "lro/radar_velocity.hpp"
#include "lro/sensor_types.hpp"

namespace lro {

enum class Mode { kFused, kLio, kRio };

Mode mode_from_string(const std::string& s);  // throws lro::Error on unknown
std::string to_string(Mode m);

struct PipelineConfig {
  Mode mode = Mode::kFused;
  double lag = 0.75;                  // s, sliding-window span
  OptimizerConfig optimizer;
  LidarConfig lidar;
  RansacParams ransac;
  ImuNoise imu_noise;
  double lidar_sigma = 0.05;          // m, per-feature isotropic noise
  double init_duration = 2.0;         // s of static data for initialization
  double accel_variance_gate = 0.05;  // (m/s^2)^2, static detector
  double init_yaw_sigma = 1e-3;       // first node fixes the world gauge
  double init_pos_sigma = 1e-4;
};

struct InitResult {
  Mat3 R0 = Mat3::Identity();  // gravity-aligned, yaw = 0
  Vec3 gyro_bias = Vec3::Zero();
  double gravity_magnitude = 9.81;
};

/// Gravity alignment and gyro-bias estimation from static IMU data.
/// Throws MotionDetected when the accel variance gate fails.
InitResult initialize_static(const std::vector<ImuSample>& samples, double variance_gate);

struct NodeDiagnostics {
  double t = 0.0;
  int factor_count = 0;
  int plane_factors = 0;
  int line_factors = 0;
  int radar_inliers = 0;
  bool radar_factor = false;
  bool radar_degenerate = false;
  double cost = 0.0;
  int iterations = 0;
  bool diverged = false;
  double degeneracy_ratio = 0.0;  // min/max translation eigenvalue, newest node
};

/// Tightly-coupled LiDAR-radar-inertial odometry over a fixed-lag window.
/// Feed sensor callbacks in time order; nodes are created on radar
/// timestamps (LiDAR midpoints in LiDAR-inertial mode).
class OdometryPipeline {
 public:
  OdometryPipeline(PipelineConfig cfg, Extrinsics ext);

  void on_imu(const ImuSample& s);
  void on_radar(const RadarScan& scan);
  void on_lidar(const LidarScan& scan);

  bool initialized() const { return initialized_; }
  std::pair<double, NavState> latest_state() const;  // throws NotInitialized

  const std::vector<StampedPose>& trajectory() const { return trajectory_; }
  const std::vector<NodeDiagnostics>& diagnostics() const { return diagnostics_; }
  const std::vector<std::pair<double, Vec3>>& velocity_log() const { return velocity_log_; }
  const InitResult& init_result() const { return init_; }
  const FactorGraphWindow& window() const { return window_; }

 private:
  void try_initialize(double t);
  int create_node(double t);  // IMU chain from the previous node
  void attach_lidar(const LidarScan& scan, int node_id, double node_t);
  void optimize_and_slide(bool emit);

  PipelineConfig cfg_;
  Extrinsics ext_;
  ImuBuffer imu_;
  FactorGraphWindow window_;
  bool initialized_ = false;
  InitResult init_;
  Vec3 gravity_w_ = Vec3(0, 0, -9.81);
  double last_node_t_ = 0.0;
  int last_node_id_ = -1;
  double imu_start_t_ = 0.0;
  bool have_imu_ = false;

  FeatureMaps maps_;
  std::vector<std::pair<int, FeatureCloud>> pending_map_updates_;
  std::mt19937_64 ransac_rng_{12345};

  std::vector<StampedPose> trajectory_;
  std::vector<NodeDiagnostics> diagnostics_;
  std::vector<std::pair<double, Vec3>> velocity_log_;
  NodeDiagnostics current_;
};

struct RunResult {
  std::vector<StampedPose> trajectory;
  std::vector<NodeDiagnostics> diagnostics;
  std::vector<std::pair<double, Vec3>> velocities;
  InitResult init;
};

/// Time-ordered replay of a dataset through the pipeline (IMU before radar
/// before LiDAR at ties; LiDAR scans dispatched at their end time).
RunResult run_dataset(const std::vector<ImuSample>& imu, const std::vector<RadarScan>& radar,
                      const std::vector<LidarScan>& lidar, const PipelineConfig& cfg,
                      const Extrinsics& ext);

}  // namespace lro
