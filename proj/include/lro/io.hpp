#pragma once

#include <map>
#include <string>
#include <vector>

#include "lro/factors.hpp"
#include "lro/sensor_types.hpp"

namespace lro {

/// One stamped pose of a trajectory file (TUM layout: t tx ty tz qx qy qz qw).
struct StampedPose {
  double t = 0.0;
  Pose T;
};

/// Full calibration block shared between the simulator and the estimator.
struct Calibration {
  Extrinsics extrinsics;
  double gravity_magnitude = 9.81;
  ImuNoise imu_noise;
};

// Sensor log round trip. Readers validate the header and throw lro::Error on
// malformed rows; writers emit the documented field order with full precision.
void write_imu_csv(const std::string& path, const std::vector<ImuSample>& samples);
std::vector<ImuSample> read_imu_csv(const std::string& path);

void write_radar_csv(const std::string& path, const std::vector<RadarScan>& scans);
std::vector<RadarScan> read_radar_csv(const std::string& path);

void write_lidar_csv(const std::string& path, const std::vector<LidarScan>& scans);
std::vector<LidarScan> read_lidar_csv(const std::string& path);

void write_tum(const std::string& path, const std::vector<StampedPose>& traj);
std::vector<StampedPose> read_tum(const std::string& path);

void write_calibration(const std::string& path, const Calibration& calib);
Calibration read_calibration(const std::string& path);

void write_velocity_csv(const std::string& path,
                        const std::vector<std::pair<double, Vec3>>& velocities);
std::vector<std::pair<double, Vec3>> read_velocity_csv(const std::string& path);

}  // namespace lro
