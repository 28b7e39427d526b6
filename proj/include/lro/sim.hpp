#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lro/io.hpp"
#include "lro/sensor_types.hpp"

namespace lro::sim {

/// Finite rectangular planar patch. `u_axis`/`v_axis` span the plane and are
/// orthonormal with the normal; rays hit the patch from either side.
struct Patch {
  Vec3 center;
  Vec3 normal;
  Vec3 u_axis;
  Vec3 v_axis;
  double half_u = 1.0;
  double half_v = 1.0;
  double reflectivity = 1.0;
};

Patch make_patch(const Vec3& center, const Vec3& normal, const Vec3& u_hint, double half_u,
                 double half_v, double reflectivity = 1.0);

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

struct WorldModel {
  std::vector<Patch> patches;
  std::optional<Aabb> fog_region;  // LiDAR degradation applies only inside
};

/// Adds the six faces of an axis-aligned box (normals outward).
void add_box(WorldModel& world, const Vec3& center, const Vec3& half_extents,
             double reflectivity = 1.0);

// Named presets (desk-scale analogs of the three experimental regimes).
WorldModel make_room(double width = 10.0, double depth = 10.0, double height = 4.0);
WorldModel make_tunnel(double length = 100.0, double width = 8.0, double height = 4.0);
WorldModel make_fog_hallway(double corridor_length = 40.0, double corridor_width = 3.0,
                            double room_size = 10.0, double height = 3.0);

/// Nearest patch hit along o + t*d for t > t_min; returns range or nullopt.
std::optional<double> raycast(const WorldModel& world, const Vec3& origin, const Vec3& dir,
                              double max_range, double t_min = 0.05);

/// One motion primitive: world-frame translation delta_p and a body-frame
/// rotation vector, both scaled by a quintic time profile so every segment
/// starts and ends at rest (C^2 velocity across segment boundaries).
struct TrajectorySegment {
  double duration = 1.0;
  Vec3 delta_p = Vec3::Zero();
  Vec3 rotation = Vec3::Zero();  // axis-angle, body frame

  // arc mode: sweep around a world-frame vertical axis through arc_center
  // instead of translating; the attitude turns with the arc (yaw-following)
  bool arc = false;
  Vec3 arc_center = Vec3::Zero();
  double arc_angle = 0.0;  // rad, signed, about world +z
};

TrajectorySegment make_move(double duration, const Vec3& delta_p,
                            const Vec3& rotation = Vec3::Zero());
TrajectorySegment make_hold(double duration);
TrajectorySegment make_arc(double duration, const Vec3& center, double angle);

class Trajectory {
 public:
  Trajectory(Pose start, std::vector<TrajectorySegment> segments);

  struct Eval {
    Pose T;                       // T_W_I
    Vec3 v_w = Vec3::Zero();      // world-frame velocity
    Vec3 a_w = Vec3::Zero();      // world-frame acceleration
    Vec3 omega_b = Vec3::Zero();  // body-frame angular rate
  };
  Eval at(double t) const;  // clamped to [0, duration]

  double duration() const { return total_; }
  const Pose& start() const { return starts_.front().second; }

 private:
  std::vector<TrajectorySegment> segments_;
  std::vector<std::pair<double, Pose>> starts_;  // pose at each segment start
  double total_ = 0.0;
};

struct SensorSimConfig {
  uint64_t seed = 1;
  double duration = 30.0;

  // IMU
  double imu_rate = 200.0;
  ImuNoise imu_noise;
  bool imu_noise_enabled = true;
  Vec3 initial_accel_bias = Vec3::Zero();
  Vec3 initial_gyro_bias = Vec3::Zero();
  double gravity_magnitude = 9.81;

  // LiDAR
  int lidar_rings = 16;
  int lidar_points_per_ring = 360;
  double lidar_period = 0.1;
  double lidar_vertical_fov_deg = 30.0;  // total, centered on the horizon
  double lidar_range_sigma = 0.01;
  double lidar_max_range = 50.0;

  // radar (chirp-limited range/doppler)
  int radar_max_targets = 128;
  double radar_max_range = 15.999;
  double radar_max_doppler = 3.995;
  double radar_doppler_sigma = 0.05;
  double radar_bearing_quant_deg = 0.0;  // 0 disables quantization
  double radar_azimuth_fov_deg = 140.0;
  double radar_elevation_fov_deg = 60.0;
  double radar_dynamic_fraction = 0.0;

  // fog degradation (LiDAR only, inside world.fog_region)
  double fog_range_limit = 2.0;
  double fog_dropout = 0.3;
  double fog_noise_inflation = 3.0;
};

struct Dataset {
  std::vector<ImuSample> imu;
  std::vector<RadarScan> radar;
  std::vector<LidarScan> lidar;
  std::vector<StampedPose> truth;                  // at lidar and radar stamps
  std::vector<std::pair<double, Vec3>> truth_vel;  // world-frame, radar stamps
  Calibration calib;
};

/// Analytic ground truth plus a biased, noisy IMU stream at the IMU rate.
std::vector<ImuSample> generate_truth(const Trajectory& traj, const SensorSimConfig& cfg,
                                      std::mt19937_64& rng);

LidarScan simulate_lidar_scan(const WorldModel& world, const Trajectory& traj,
                              double t_start, const Pose& T_I_L,
                              const SensorSimConfig& cfg, std::mt19937_64& rng);

RadarScan simulate_radar_scan(const WorldModel& world, const Trajectory::Eval& truth,
                              double t, const Pose& T_I_R, const SensorSimConfig& cfg,
                              std::mt19937_64& rng);

/// Full sensor suite over the trajectory: LiDAR scans starting on the 10 Hz
/// grid, radar scans at the scan midpoints, IMU continuously.
Dataset generate_dataset(const WorldModel& world, const Trajectory& traj,
                         const SensorSimConfig& cfg, const Calibration& calib);

void write_dataset(const std::string& dir, const Dataset& data);

struct ApeResult {
  double rmse_aligned = 0.0;
  double rmse_unaligned = 0.0;
  size_t matched = 0;
};

/// Translational RMSE after timestamp association (10 ms gate). The aligned
/// variant removes the best rigid transform first. Throws NoOverlap.
ApeResult compute_ape(const std::vector<StampedPose>& estimate,
                      const std::vector<StampedPose>& truth);

struct VelocityErrorStats {
  Vec3 mean = Vec3::Zero();
  Vec3 stddev = Vec3::Zero();
  size_t matched = 0;
};

VelocityErrorStats velocity_error_stats(const std::vector<std::pair<double, Vec3>>& estimate,
                                        const std::vector<std::pair<double, Vec3>>& truth);

}  // namespace lro::sim
