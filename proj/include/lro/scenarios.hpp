#pragma once

#include <string>

#include "lro/sim.hpp"

namespace lro::sim {

/// A fully specified synthetic experiment: environment, motion, sensor
/// configuration, and calibration.
struct Scenario {
  std::string name;
  WorldModel world;
  Trajectory trajectory{Pose::identity(), {}};
  SensorSimConfig config;
  Calibration calib;
};

struct ScenarioOptions {
  uint64_t seed = 1;
  double duration = 0.0;      // 0 = preset default
  double length = 0.0;        // tunnel length / fog corridor length; 0 = default
  double fog_range = 2.0;     // LiDAR range limit inside the fog bank
  bool noiseless = false;     // disable all sensor noise and IMU biases
};

/// Motion-capture-style cluttered room: well-constrained in every direction.
Scenario make_room_scenario(const ScenarioOptions& opts);

/// Geometrically self-similar straight tunnel; LiDAR cannot constrain the
/// along-axis direction. The platform holds still, turns to face the axis,
/// then traverses.
Scenario make_tunnel_scenario(const ScenarioOptions& opts);

/// Two rooms joined by a fogged corridor; LiDAR range collapses inside the
/// fog while radar is unaffected. Out-and-back loop of roughly 100 m.
Scenario make_fog_scenario(const ScenarioOptions& opts);

Scenario make_scenario(const std::string& preset, const ScenarioOptions& opts);

Dataset generate(const Scenario& scenario);

}  // namespace lro::sim
