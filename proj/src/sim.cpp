#include "lro/sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace lro::sim {

Patch make_patch(const Vec3& center, const Vec3& normal, const Vec3& u_hint, double half_u,
                 double half_v, double reflectivity) {
  Patch p;
  p.center = center;
  p.normal = normal.normalized();
  p.u_axis = (u_hint - u_hint.dot(p.normal) * p.normal).normalized();
  p.v_axis = p.normal.cross(p.u_axis);
  p.half_u = half_u;
  p.half_v = half_v;
  p.reflectivity = reflectivity;
  return p;
}

void add_box(WorldModel& world, const Vec3& c, const Vec3& h, double reflectivity) {
  world.patches.push_back(make_patch(c + Vec3(h.x(), 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0),
                                     h.y(), h.z(), reflectivity));
  world.patches.push_back(make_patch(c - Vec3(h.x(), 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0),
                                     h.y(), h.z(), reflectivity));
  world.patches.push_back(make_patch(c + Vec3(0, h.y(), 0), Vec3(0, 1, 0), Vec3(1, 0, 0),
                                     h.x(), h.z(), reflectivity));
  world.patches.push_back(make_patch(c - Vec3(0, h.y(), 0), Vec3(0, -1, 0), Vec3(1, 0, 0),
                                     h.x(), h.z(), reflectivity));
  world.patches.push_back(make_patch(c + Vec3(0, 0, h.z()), Vec3(0, 0, 1), Vec3(1, 0, 0),
                                     h.x(), h.y(), reflectivity));
  world.patches.push_back(make_patch(c - Vec3(0, 0, h.z()), Vec3(0, 0, -1), Vec3(1, 0, 0),
                                     h.x(), h.y(), reflectivity));
}

WorldModel make_room(double width, double depth, double height) {
  WorldModel w;
  const double hx = width / 2, hy = depth / 2;
  w.patches.push_back(make_patch(Vec3(0, 0, 0), Vec3(0, 0, 1), Vec3(1, 0, 0), hx, hy));
  w.patches.push_back(make_patch(Vec3(0, 0, height), Vec3(0, 0, -1), Vec3(1, 0, 0), hx, hy));
  w.patches.push_back(
      make_patch(Vec3(hx, 0, height / 2), Vec3(-1, 0, 0), Vec3(0, 1, 0), hy, height / 2));
  w.patches.push_back(
      make_patch(Vec3(-hx, 0, height / 2), Vec3(1, 0, 0), Vec3(0, 1, 0), hy, height / 2));
  w.patches.push_back(
      make_patch(Vec3(0, hy, height / 2), Vec3(0, -1, 0), Vec3(1, 0, 0), hx, height / 2));
  w.patches.push_back(
      make_patch(Vec3(0, -hy, height / 2), Vec3(0, 1, 0), Vec3(1, 0, 0), hx, height / 2));
  // clutter boxes break self-similarity and provide corner features
  add_box(w, Vec3(hx - 1.2, hy - 1.5, 0.6), Vec3(0.4, 0.5, 0.6), 0.8);
  add_box(w, Vec3(-hx + 1.5, -hy + 1.2, 0.45), Vec3(0.5, 0.4, 0.45), 0.8);
  add_box(w, Vec3(hx - 1.8, -hy + 2.0, 0.75), Vec3(0.35, 0.35, 0.75), 0.8);
  return w;
}

WorldModel make_tunnel(double length, double width, double height) {
  // strictly self-similar along +x: walls, floor, ceiling only, with margin
  // at both ends so no end cap is ever visible
  WorldModel w;
  const double hy = width / 2;
  const double margin = 60.0;
  const double cx = length / 2;
  const double hu = length / 2 + margin;
  w.patches.push_back(
      make_patch(Vec3(cx, hy, height / 2), Vec3(0, -1, 0), Vec3(1, 0, 0), hu, height / 2));
  w.patches.push_back(
      make_patch(Vec3(cx, -hy, height / 2), Vec3(0, 1, 0), Vec3(1, 0, 0), hu, height / 2));
  w.patches.push_back(make_patch(Vec3(cx, 0, 0), Vec3(0, 0, 1), Vec3(1, 0, 0), hu, hy));
  w.patches.push_back(make_patch(Vec3(cx, 0, height), Vec3(0, 0, -1), Vec3(1, 0, 0), hu, hy));
  return w;
}

WorldModel make_fog_hallway(double corridor_length, double corridor_width, double room_size,
                            double height) {
  // start room at x < 0, corridor along +x, end room beyond it; the fog bank
  // fills the corridor only
  WorldModel w;
  const double hw = corridor_width / 2;
  const double hr = room_size / 2;
  const double x0 = 0.0, x1 = corridor_length;

  // start room centered at (-hr, 0)
  w.patches.push_back(
      make_patch(Vec3(-room_size, 0, height / 2), Vec3(1, 0, 0), Vec3(0, 1, 0), hr, height / 2));
  w.patches.push_back(
      make_patch(Vec3(-hr, hr, height / 2), Vec3(0, -1, 0), Vec3(1, 0, 0), hr, height / 2));
  w.patches.push_back(
      make_patch(Vec3(-hr, -hr, height / 2), Vec3(0, 1, 0), Vec3(1, 0, 0), hr, height / 2));
  // wall segments flanking the corridor mouth
  const double flank = (room_size - corridor_width) / 4;
  w.patches.push_back(make_patch(Vec3(x0, hw + flank, height / 2), Vec3(-1, 0, 0),
                                 Vec3(0, 1, 0), flank, height / 2));
  w.patches.push_back(make_patch(Vec3(x0, -hw - flank, height / 2), Vec3(-1, 0, 0),
                                 Vec3(0, 1, 0), flank, height / 2));

  // corridor walls
  w.patches.push_back(make_patch(Vec3((x0 + x1) / 2, hw, height / 2), Vec3(0, -1, 0),
                                 Vec3(1, 0, 0), corridor_length / 2, height / 2));
  w.patches.push_back(make_patch(Vec3((x0 + x1) / 2, -hw, height / 2), Vec3(0, 1, 0),
                                 Vec3(1, 0, 0), corridor_length / 2, height / 2));

  // end room beyond x1 with a far wall and side walls, plus clutter
  w.patches.push_back(make_patch(Vec3(x1 + room_size, 0, height / 2), Vec3(-1, 0, 0),
                                 Vec3(0, 1, 0), hr, height / 2));
  w.patches.push_back(
      make_patch(Vec3(x1 + hr, hr, height / 2), Vec3(0, -1, 0), Vec3(1, 0, 0), hr, height / 2));
  w.patches.push_back(
      make_patch(Vec3(x1 + hr, -hr, height / 2), Vec3(0, 1, 0), Vec3(1, 0, 0), hr, height / 2));
  w.patches.push_back(make_patch(Vec3(x1, hw + flank, height / 2), Vec3(1, 0, 0), Vec3(0, 1, 0),
                                 flank, height / 2));
  w.patches.push_back(make_patch(Vec3(x1, -hw - flank, height / 2), Vec3(1, 0, 0),
                                 Vec3(0, 1, 0), flank, height / 2));
  add_box(w, Vec3(x1 + hr, hr - 1.0, 0.5), Vec3(0.4, 0.4, 0.5), 0.8);
  add_box(w, Vec3(-hr, -hr + 1.2, 0.5), Vec3(0.4, 0.4, 0.5), 0.8);

  // floor and ceiling across everything
  const double total_hu = room_size + corridor_length / 2 + room_size;
  const double mid_x = (x1 + room_size - room_size) / 2;
  w.patches.push_back(
      make_patch(Vec3(mid_x, 0, 0), Vec3(0, 0, 1), Vec3(1, 0, 0), total_hu, hr));
  w.patches.push_back(
      make_patch(Vec3(mid_x, 0, height), Vec3(0, 0, -1), Vec3(1, 0, 0), total_hu, hr));

  Aabb fog;
  fog.min = Vec3(x0, -hw - 0.01, -0.01);
  fog.max = Vec3(x1, hw + 0.01, height + 0.01);
  w.fog_region = fog;
  return w;
}

std::optional<double> raycast(const WorldModel& world, const Vec3& origin, const Vec3& dir,
                              double max_range, double t_min) {
  double best = max_range;
  bool hit = false;
  for (const Patch& patch : world.patches) {
    const double denom = dir.dot(patch.normal);
    if (std::abs(denom) < 1e-9) continue;
    const double t = (patch.center - origin).dot(patch.normal) / denom;
    if (t <= t_min || t >= best) continue;
    const Vec3 x = origin + t * dir - patch.center;
    if (std::abs(x.dot(patch.u_axis)) > patch.half_u) continue;
    if (std::abs(x.dot(patch.v_axis)) > patch.half_v) continue;
    best = t;
    hit = true;
  }
  if (!hit) return std::nullopt;
  return best;
}

TrajectorySegment make_move(double duration, const Vec3& delta_p, const Vec3& rotation) {
  TrajectorySegment s;
  s.duration = duration;
  s.delta_p = delta_p;
  s.rotation = rotation;
  return s;
}

TrajectorySegment make_hold(double duration) { return make_move(duration, Vec3::Zero()); }

TrajectorySegment make_arc(double duration, const Vec3& center, double angle) {
  TrajectorySegment s;
  s.duration = duration;
  s.arc = true;
  s.arc_center = center;
  s.arc_angle = angle;
  return s;
}

Trajectory::Trajectory(Pose start, std::vector<TrajectorySegment> segments)
    : segments_(std::move(segments)) {
  double t = 0.0;
  Pose T = start;
  starts_.push_back({0.0, T});
  for (const TrajectorySegment& s : segments_) {
    t += s.duration;
    if (s.arc) {
      const Mat3 Rz = exp_so3(Vec3(0, 0, s.arc_angle));
      T = Pose{Rz * T.R, s.arc_center + Rz * (T.p - s.arc_center)};
    } else {
      T = Pose{T.R * exp_so3(s.rotation), T.p + s.delta_p};
    }
    starts_.push_back({t, T});
  }
  total_ = t;
}

Trajectory::Eval Trajectory::at(double t) const {
  Eval e;
  if (segments_.empty() || t <= 0.0) {
    e.T = starts_.front().second;
    return e;
  }
  if (t >= total_) {
    e.T = starts_.back().second;
    return e;
  }
  size_t k = 0;
  while (k + 1 < starts_.size() && starts_[k + 1].first <= t) ++k;
  const TrajectorySegment& seg = segments_[k];
  const Pose& T0 = starts_[k].second;
  const double tau = (t - starts_[k].first) / seg.duration;
  // quintic profile: rest-to-rest with zero end accelerations
  const double s = tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau));
  const double ds_dtau = tau * tau * (30.0 + tau * (-60.0 + 30.0 * tau));
  const double dds_dtau = tau * (60.0 + tau * (-180.0 + 120.0 * tau));
  const double ds = ds_dtau / seg.duration;
  const double dds = dds_dtau / (seg.duration * seg.duration);

  if (seg.arc) {
    const double alpha = s * seg.arc_angle;
    const Mat3 Rz = exp_so3(Vec3(0, 0, alpha));
    const Vec3 r = Rz * (T0.p - seg.arc_center);
    const Vec3 z(0, 0, 1);
    const double rate = ds * seg.arc_angle;
    e.T.R = Rz * T0.R;
    e.T.p = seg.arc_center + r;
    e.v_w = rate * z.cross(r);
    // tangential plus centripetal terms
    e.a_w = dds * seg.arc_angle * z.cross(r) + rate * rate * z.cross(z.cross(r));
    e.omega_b = e.T.R.transpose() * (rate * z);
  } else {
    e.T.R = T0.R * exp_so3(s * seg.rotation);
    e.T.p = T0.p + s * seg.delta_p;
    e.v_w = ds * seg.delta_p;
    e.a_w = dds * seg.delta_p;
    e.omega_b = ds * seg.rotation;  // fixed body axis: exact, not first-order
  }
  return e;
}

std::vector<ImuSample> generate_truth(const Trajectory& traj, const SensorSimConfig& cfg,
                                      std::mt19937_64& rng) {
  std::normal_distribution<double> nrm(0.0, 1.0);
  const double dt = 1.0 / cfg.imu_rate;
  const Vec3 g_w(0, 0, -cfg.gravity_magnitude);
  // discrete-time noise std from the continuous densities
  const double sg = cfg.imu_noise_enabled ? cfg.imu_noise.gyro_noise_density / std::sqrt(dt) : 0.0;
  const double sa = cfg.imu_noise_enabled ? cfg.imu_noise.accel_noise_density / std::sqrt(dt) : 0.0;
  const double wg = cfg.imu_noise_enabled ? cfg.imu_noise.gyro_bias_walk * std::sqrt(dt) : 0.0;
  const double wa = cfg.imu_noise_enabled ? cfg.imu_noise.accel_bias_walk * std::sqrt(dt) : 0.0;

  Vec3 bg = cfg.initial_gyro_bias;
  Vec3 ba = cfg.initial_accel_bias;
  std::vector<ImuSample> out;
  const auto n = static_cast<size_t>(std::floor(cfg.duration * cfg.imu_rate)) + 1;
  out.reserve(n);
  for (size_t k = 0; k < n; ++k) {
    const double t = k * dt;
    const Trajectory::Eval e = traj.at(t);
    ImuSample s;
    s.t = t;
    s.angular_velocity = e.omega_b + bg + sg * Vec3(nrm(rng), nrm(rng), nrm(rng));
    s.specific_force =
        e.T.R.transpose() * (e.a_w - g_w) + ba + sa * Vec3(nrm(rng), nrm(rng), nrm(rng));
    out.push_back(s);
    bg += wg * Vec3(nrm(rng), nrm(rng), nrm(rng));
    ba += wa * Vec3(nrm(rng), nrm(rng), nrm(rng));
  }
  return out;
}

LidarScan simulate_lidar_scan(const WorldModel& world, const Trajectory& traj,
                              double t_start, const Pose& T_I_L,
                              const SensorSimConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> nrm(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  LidarScan scan;
  scan.t_start = t_start;
  scan.period = cfg.lidar_period;

  const double fov = cfg.lidar_vertical_fov_deg * M_PI / 180.0;
  for (int ring = 0; ring < cfg.lidar_rings; ++ring) {
    const double elev =
        cfg.lidar_rings > 1 ? -fov / 2 + fov * ring / (cfg.lidar_rings - 1) : 0.0;
    const double ce = std::cos(elev), se = std::sin(elev);
    for (int i = 0; i < cfg.lidar_points_per_ring; ++i) {
      const double dt = cfg.lidar_period * i / cfg.lidar_points_per_ring;
      const double az = 2.0 * M_PI * i / cfg.lidar_points_per_ring;
      const Vec3 d_L(ce * std::cos(az), ce * std::sin(az), se);

      const Pose T_W_L = traj.at(t_start + dt).T * T_I_L;
      const Vec3 d_W = T_W_L.R * d_L;
      const auto range = raycast(world, T_W_L.p, d_W, cfg.lidar_max_range);
      if (!range) continue;

      double sigma = cfg.lidar_range_sigma;
      if (world.fog_region && world.fog_region->contains(T_W_L.p)) {
        if (*range > cfg.fog_range_limit) continue;
        if (uni(rng) < cfg.fog_dropout) continue;
        sigma *= cfg.fog_noise_inflation;
      }
      LidarPoint p;
      p.position = (*range + sigma * nrm(rng)) * d_L;
      p.dt = dt;
      p.ring = ring;
      p.intensity = 1.0;
      scan.points.push_back(p);
    }
  }
  return scan;
}

RadarScan simulate_radar_scan(const WorldModel& world, const Trajectory::Eval& truth,
                              double t, const Pose& T_I_R, const SensorSimConfig& cfg,
                              std::mt19937_64& rng) {
  std::normal_distribution<double> nrm(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  RadarScan scan;
  scan.t = t;

  const Pose T_W_R = truth.T * T_I_R;
  // radar-frame sensor velocity: rotated world velocity plus the lever-arm
  // contribution of the true body rate
  const Vec3 v_R =
      T_I_R.R.transpose() * (truth.T.R.transpose() * truth.v_w + truth.omega_b.cross(T_I_R.p));

  const double haz = cfg.radar_azimuth_fov_deg / 2 * M_PI / 180.0;
  const double hel = cfg.radar_elevation_fov_deg / 2 * M_PI / 180.0;
  const double quant = cfg.radar_bearing_quant_deg * M_PI / 180.0;

  for (int i = 0; i < cfg.radar_max_targets; ++i) {
    double az = (2.0 * uni(rng) - 1.0) * haz;
    double el = (2.0 * uni(rng) - 1.0) * hel;
    const Vec3 d_R(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    const auto range = raycast(world, T_W_R.p, T_W_R.R * d_R, cfg.radar_max_range);
    if (!range) continue;

    if (quant > 0.0) {
      az = std::round(az / quant) * quant;
      el = std::round(el / quant) * quant;
    }
    const Vec3 d_q(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));

    RadarPoint p;
    p.position = *range * d_q;
    double v_r = -d_R.dot(v_R);
    if (uni(rng) < cfg.radar_dynamic_fraction) {
      const double sign = uni(rng) < 0.5 ? -1.0 : 1.0;
      v_r += sign * (1.0 + uni(rng));  // moving target, >= 1 m/s off
    }
    v_r += cfg.radar_doppler_sigma * nrm(rng);
    p.radial_speed = std::clamp(v_r, -cfg.radar_max_doppler, cfg.radar_max_doppler);
    p.rcs = 10.0;
    scan.points.push_back(p);
  }
  return scan;
}

Dataset generate_dataset(const WorldModel& world, const Trajectory& traj,
                         const SensorSimConfig& cfg, const Calibration& calib) {
  Dataset data;
  data.calib = calib;
  data.calib.gravity_magnitude = cfg.gravity_magnitude;
  data.calib.imu_noise = cfg.imu_noise;

  // independent, index-derived streams so generation order never matters
  std::mt19937_64 imu_rng(cfg.seed * 1000003ull + 1);
  data.imu = generate_truth(traj, cfg, imu_rng);

  const auto n_scans = static_cast<size_t>(std::floor(cfg.duration / cfg.lidar_period));
  for (size_t k = 0; k < n_scans; ++k) {
    const double t_start = k * cfg.lidar_period;
    std::mt19937_64 lrng(cfg.seed * 1000003ull + 2 * k + 2);
    data.lidar.push_back(
        simulate_lidar_scan(world, traj, t_start, calib.extrinsics.T_I_L, cfg, lrng));

    const double t_mid = t_start + cfg.lidar_period / 2;
    const Trajectory::Eval e = traj.at(t_mid);
    std::mt19937_64 rrng(cfg.seed * 1000003ull + 2 * k + 3);
    data.radar.push_back(simulate_radar_scan(world, e, t_mid, calib.extrinsics.T_I_R, cfg, rrng));

    data.truth.push_back({t_start, traj.at(t_start).T});
    data.truth.push_back({t_mid, e.T});
    data.truth_vel.push_back({t_mid, e.v_w});
  }
  return data;
}

void write_dataset(const std::string& dir, const Dataset& data) {
  std::filesystem::create_directories(dir);
  write_imu_csv(dir + "/imu.csv", data.imu);
  write_radar_csv(dir + "/radar.csv", data.radar);
  write_lidar_csv(dir + "/lidar.csv", data.lidar);
  write_tum(dir + "/ground_truth.tum", data.truth);
  write_calibration(dir + "/calib.yaml", data.calib);

  write_velocity_csv(dir + "/ground_truth_vel.csv", data.truth_vel);
}

namespace {

std::vector<std::pair<Vec3, Vec3>> match_positions(const std::vector<StampedPose>& estimate,
                                                   const std::vector<StampedPose>& truth) {
  std::vector<std::pair<Vec3, Vec3>> pairs;
  for (const StampedPose& e : estimate) {
    const StampedPose* best = nullptr;
    double best_dt = 0.01;  // association gate
    for (const StampedPose& g : truth) {
      const double dt = std::abs(g.t - e.t);
      if (dt <= best_dt) {
        best_dt = dt;
        best = &g;
      }
    }
    if (best) pairs.push_back({e.T.p, best->T.p});
  }
  return pairs;
}

}  // namespace

ApeResult compute_ape(const std::vector<StampedPose>& estimate,
                      const std::vector<StampedPose>& truth) {
  const auto pairs = match_positions(estimate, truth);
  if (pairs.empty()) throw NoOverlap();

  ApeResult res;
  res.matched = pairs.size();
  double acc = 0.0;
  for (const auto& [e, g] : pairs) acc += (e - g).squaredNorm();
  res.rmse_unaligned = std::sqrt(acc / pairs.size());

  // best rigid transform estimate -> truth (Kabsch on centered positions)
  Vec3 mean_e = Vec3::Zero(), mean_g = Vec3::Zero();
  for (const auto& [e, g] : pairs) {
    mean_e += e;
    mean_g += g;
  }
  mean_e /= pairs.size();
  mean_g /= pairs.size();
  Mat3 H = Mat3::Zero();
  for (const auto& [e, g] : pairs) H += (e - mean_e) * (g - mean_g).transpose();
  Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 R = svd.matrixV() * svd.matrixU().transpose();
  if (R.determinant() < 0) {
    Mat3 D = Mat3::Identity();
    D(2, 2) = -1.0;
    R = svd.matrixV() * D * svd.matrixU().transpose();
  }
  acc = 0.0;
  for (const auto& [e, g] : pairs) {
    acc += (R * (e - mean_e) - (g - mean_g)).squaredNorm();
  }
  res.rmse_aligned = std::sqrt(acc / pairs.size());
  return res;
}

VelocityErrorStats velocity_error_stats(const std::vector<std::pair<double, Vec3>>& estimate,
                                        const std::vector<std::pair<double, Vec3>>& truth) {
  std::vector<Vec3> errors;
  for (const auto& [t, v] : estimate) {
    const std::pair<double, Vec3>* best = nullptr;
    double best_dt = 0.01;
    for (const auto& g : truth) {
      const double dt = std::abs(g.first - t);
      if (dt <= best_dt) {
        best_dt = dt;
        best = &g;
      }
    }
    if (best) errors.push_back(v - best->second);
  }
  if (errors.empty()) throw NoOverlap();

  VelocityErrorStats st;
  st.matched = errors.size();
  for (const Vec3& e : errors) st.mean += e;
  st.mean /= static_cast<double>(errors.size());
  Vec3 var = Vec3::Zero();
  for (const Vec3& e : errors) var += (e - st.mean).cwiseAbs2();
  if (errors.size() > 1) var /= static_cast<double>(errors.size() - 1);
  st.stddev = var.cwiseSqrt();
  return st;
}

}  // namespace lro::sim
