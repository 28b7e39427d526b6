#pragma once

#include <vector>

#include "lro/errors.hpp"
#include "lro/geometry.hpp"

namespace lro {

struct ImuSample {
  double t = 0.0;              // seconds
  Vec3 angular_velocity;       // rad/s, frame I
  Vec3 specific_force;         // m/s^2, frame I
};

struct RadarPoint {
  Vec3 position;               // m, frame R
  double radial_speed = 0.0;   // m/s, signed
  double rcs = 0.0;            // dBsm, carried but unused by estimation
};

struct RadarScan {
  double t = 0.0;
  std::vector<RadarPoint> points;
};

struct LidarPoint {
  Vec3 position;               // m, frame L
  double dt = 0.0;             // s offset from scan start
  int ring = 0;
  double intensity = 0.0;
};

struct LidarScan {
  double t_start = 0.0;
  double period = 0.1;
  std::vector<LidarPoint> points;  // per ring, ordered by dt within a ring
};

struct Extrinsics {
  Pose T_I_L;  // LiDAR -> IMU
  Pose T_I_R;  // radar -> IMU
};

/// Unit bearing of a radar point. Throws ZeroRangePoint below 1e-6 m range.
Vec3 bearing(const RadarPoint& p);

/// Time-ordered IMU buffer with interval extraction for preintegration.
/// Single writer, single reader; an interval (t_a, t_b] may only be read
/// once every sample with t <= t_b has been appended.
class ImuBuffer {
 public:
  void append(const ImuSample& s);

  /// Samples strictly inside (t_a, t_b], with boundary samples synthesized
  /// at t_a and t_b by linear interpolation of the neighbors so that
  /// consecutive intervals tile time exactly. Throws EmptyInterval when the
  /// buffer has nothing usable.
  std::vector<ImuSample> between(double t_a, double t_b) const;

  /// Copy of all samples with t in [t_a, t_b] (inclusive), no synthesis.
  std::vector<ImuSample> range(double t_a, double t_b) const;

  bool empty() const { return samples_.empty(); }
  size_t size() const { return samples_.size(); }
  double latest_time() const { return samples_.empty() ? 0.0 : samples_.back().t; }

 private:
  ImuSample at(double t) const;  // linear interpolation / hold at the ends
  std::vector<ImuSample> samples_;
};

}  // namespace lro
