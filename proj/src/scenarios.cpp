#include "lro/scenarios.hpp"

#include "lro/errors.hpp"

namespace lro::sim {

namespace {

Calibration default_calib() {
  Calibration c;
  c.extrinsics.T_I_L = Pose{Mat3::Identity(), Vec3(0.10, 0.0, 0.05)};
  c.extrinsics.T_I_R = Pose{Mat3::Identity(), Vec3(0.15, 0.0, -0.02)};
  return c;
}

void apply_noise_options(Scenario& s, const ScenarioOptions& opts) {
  s.config.seed = opts.seed;
  if (opts.noiseless) {
    s.config.imu_noise_enabled = false;
    s.config.lidar_range_sigma = 0.0;
    s.config.radar_doppler_sigma = 0.0;
    s.config.initial_accel_bias.setZero();
    s.config.initial_gyro_bias.setZero();
  }
  s.config.duration = s.trajectory.duration();
}

}  // namespace

Scenario make_room_scenario(const ScenarioOptions& opts) {
  Scenario s;
  s.name = "room";
  s.world = make_room();
  const Pose start{Mat3::Identity(), Vec3(-3, -2, 1.5)};
  std::vector<TrajectorySegment> segs = {
      make_hold(3.0),
      make_move(4.0, Vec3(4, 0, 0)),
      make_move(4.0, Vec3(0, 3.5, 0), Vec3(0, 0, 1.2)),
      make_move(4.0, Vec3(-4, 0.5, 0.8), Vec3(0, 0, -0.8)),
      make_move(4.0, Vec3(0, -3.5, -0.8), Vec3(0, 0, 0.6)),
      make_move(4.0, Vec3(3, 1, 0), Vec3(0, 0, -0.5)),
  };
  const double base = 23.0;
  const double total = opts.duration > 0 ? opts.duration : 30.0;
  if (total > base) segs.push_back(make_hold(total - base));
  s.trajectory = Trajectory(start, std::move(segs));
  s.config.initial_accel_bias = Vec3(0.01, -0.005, 0.008);
  s.config.initial_gyro_bias = Vec3(5e-4, -3e-4, 8e-4);
  s.calib = default_calib();
  apply_noise_options(s, opts);
  return s;
}

Scenario make_tunnel_scenario(const ScenarioOptions& opts) {
  Scenario s;
  s.name = "tunnel";
  const double length = opts.length > 0 ? opts.length : 100.0;
  s.world = make_tunnel(length);
  // Initialize facing across the tunnel, then turn onto the axis. The static
  // attitude initialization absorbs the accelerometer bias along the initial
  // heading; turning afterwards re-exposes it along the (unobservable) axis.
  const Pose start{exp_so3(Vec3(0, 0, M_PI / 2)), Vec3(20, 0, 2)};
  std::vector<TrajectorySegment> segs = {
      make_hold(3.0),
      make_move(3.0, Vec3::Zero(), Vec3(0, 0, -M_PI / 2)),
      make_move(8.0, Vec3(15, 0, 0)),
      make_move(8.0, Vec3(15, 0, 0)),
      make_move(8.0, Vec3(15, 0, 0)),
  };
  s.trajectory = Trajectory(start, std::move(segs));
  s.config.initial_accel_bias = Vec3(-0.05, 0, 0);
  s.config.imu_noise.gyro_bias_walk = 3e-4;  // cheap-MEMS bias instability
  s.calib = default_calib();
  apply_noise_options(s, opts);
  return s;
}

Scenario make_fog_scenario(const ScenarioOptions& opts) {
  Scenario s;
  s.name = "fog";
  const double corridor = opts.length > 0 ? opts.length : 40.0;
  s.world = make_fog_hallway(corridor, 3.0);
  s.config.fog_range_limit = opts.fog_range;
  // Start in the first room facing across it; slide to the corridor mouth,
  // turn onto the axis there, traverse through the fog to the far room, turn
  // around, and come back: roughly a 100 m out-and-back loop.
  const Pose start{exp_so3(Vec3(0, 0, M_PI / 2)), Vec3(-5, 0, 1.5)};
  const double half = corridor / 2;
  std::vector<TrajectorySegment> segs = {
      make_hold(3.0),
      make_move(4.0, Vec3(5, 0, 0)),  // to the corridor mouth, heading unchanged
      make_move(3.0, Vec3::Zero(), Vec3(0, 0, -M_PI / 2)),
      make_move(11.0, Vec3(half, 0, 0)),
      make_move(11.0, Vec3(half, 0, 0)),
      make_move(4.0, Vec3(5, 0, 0)),  // into the far room
      make_move(4.0, Vec3::Zero(), Vec3(0, 0, M_PI)),
      make_move(4.0, Vec3(-5, 0, 0)),
      make_move(11.0, Vec3(-half, 0, 0)),
      make_move(11.0, Vec3(-half, 0, 0)),
      make_move(4.0, Vec3(-5, 0, 0)),
      make_hold(3.0),
  };
  s.trajectory = Trajectory(start, std::move(segs));
  s.config.initial_accel_bias = Vec3(-0.05, 0, 0);
  s.config.imu_noise.gyro_bias_walk = 3e-4;
  s.calib = default_calib();
  apply_noise_options(s, opts);
  return s;
}

Scenario make_scenario(const std::string& preset, const ScenarioOptions& opts) {
  if (preset == "room") return make_room_scenario(opts);
  if (preset == "tunnel") return make_tunnel_scenario(opts);
  if (preset == "fog") return make_fog_scenario(opts);
  throw Error("unknown preset: " + preset + " (expected room, tunnel, or fog)");
}

Dataset generate(const Scenario& scenario) {
  return generate_dataset(scenario.world, scenario.trajectory, scenario.config,
                          scenario.calib);
}

}  // namespace lro::sim
