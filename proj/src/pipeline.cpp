#include "lro/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace lro {

Mode mode_from_string(const std::string& s) {
  if (s == "fused") return Mode::kFused;
  if (s == "lio") return Mode::kLio;
  if (s == "rio") return Mode::kRio;
  throw Error("unknown mode '" + s + "' (expected fused, lio or rio)");
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::kFused: return "fused";
    case Mode::kLio: return "lio";
    case Mode::kRio: return "rio";
  }
  return "?";
}

InitResult initialize_static(const std::vector<ImuSample>& samples, double variance_gate) {
  if (samples.empty()) throw EmptySampleSet();
  Vec3 mean_f = Vec3::Zero(), mean_w = Vec3::Zero();
  for (const ImuSample& s : samples) {
    mean_f += s.specific_force;
    mean_w += s.angular_velocity;
  }
  const double n = static_cast<double>(samples.size());
  mean_f /= n;
  mean_w /= n;

  Vec3 var = Vec3::Zero();
  for (const ImuSample& s : samples) var += (s.specific_force - mean_f).cwiseAbs2();
  var /= n;
  if (var.mean() > variance_gate) {
    throw MotionDetected(var.mean());
  }

  InitResult res;
  res.gravity_magnitude = mean_f.norm();
  if (res.gravity_magnitude < 9.5 || res.gravity_magnitude > 10.1) {
    throw Error("implausible gravity magnitude " + std::to_string(res.gravity_magnitude));
  }
  res.gyro_bias = mean_w;

  // minimal rotation taking the measured specific-force direction to +z:
  // afterwards R0 * f_mean = g_mag * e_z, i.e. roll/pitch aligned, yaw = 0
  const Vec3 f_hat = mean_f / res.gravity_magnitude;
  const Vec3 e_z(0, 0, 1);
  const Vec3 axis = f_hat.cross(e_z);
  const double s = axis.norm(), c = f_hat.dot(e_z);
  if (s < 1e-12) {
    res.R0 = c > 0 ? Mat3::Identity() : exp_so3(Vec3(M_PI, 0, 0));
  } else {
    res.R0 = exp_so3(std::atan2(s, c) * axis / s);
  }
  return res;
}

OdometryPipeline::OdometryPipeline(PipelineConfig cfg, Extrinsics ext)
    : cfg_(std::move(cfg)), ext_(std::move(ext)), maps_(cfg_.lidar) {}

void OdometryPipeline::on_imu(const ImuSample& s) {
  if (!have_imu_) {
    imu_start_t_ = s.t;
    have_imu_ = true;
  }
  imu_.append(s);
  if (!initialized_ && s.t - imu_start_t_ >= cfg_.init_duration) try_initialize(s.t);
}

void OdometryPipeline::try_initialize(double t) {
  const auto samples = imu_.range(t - cfg_.init_duration, t);
  InitResult res;
  try {
    res = initialize_static(samples, cfg_.accel_variance_gate);
  } catch (const MotionDetected&) {
    return;  // keep sliding the init window
  }
  init_ = res;
  gravity_w_ = Vec3(0, 0, -res.gravity_magnitude);

  NavState x0;
  x0.T.R = res.R0;
  x0.b.tail<3>() = res.gyro_bias;
  const int id = window_.add_node(t, x0);

  Eigen::Matrix<double, kStateDim, kStateDim> cov;
  cov.setZero();
  cov.diagonal().segment<3>(kIdxTheta).setConstant(cfg_.init_yaw_sigma * cfg_.init_yaw_sigma);
  cov.diagonal().segment<3>(kIdxPos).setConstant(cfg_.init_pos_sigma * cfg_.init_pos_sigma);
  cov.diagonal().segment<3>(kIdxVel).setConstant(1e-6);
  cov.diagonal().segment<6>(kIdxBa).setConstant(cfg_.imu_noise.init_bias_cov);
  window_.add_factor(std::make_shared<PriorFactorTerm>(id, x0, cov));

  initialized_ = true;
  last_node_t_ = t;
  last_node_id_ = id;
}

int OdometryPipeline::create_node(double t) {
  const auto samples = imu_.between(last_node_t_, t);
  const NavState prev = window_.nodes().at(last_node_id_).state;
  const auto preint = ImuPreintegration::integrate(samples, prev.b, cfg_.imu_noise);
  const NavState predicted = preint.predict(prev, gravity_w_);
  const int id = window_.add_node(t, predicted);
  window_.add_factor(std::make_shared<ImuFactorTerm>(last_node_id_, id, preint, gravity_w_));
  window_.add_factor(
      std::make_shared<BiasWalkTerm>(last_node_id_, id, t - last_node_t_, cfg_.imu_noise));
  last_node_t_ = t;
  last_node_id_ = id;
  current_ = NodeDiagnostics{};
  current_.t = t;
  return id;
}

void OdometryPipeline::on_radar(const RadarScan& scan) {
  if (!initialized_ || cfg_.mode == Mode::kLio) return;
  if (scan.t <= window_.nodes().begin()->second.t) return;  // pre-init leftovers
  if (scan.t <= last_node_t_) throw OutOfOrderScan(scan.t);

  const int id = create_node(scan.t);
  const Vec3 omega = imu_.between(scan.t - 0.02, scan.t).back().angular_velocity;
  try {
    VelocityEstimate est = ransac_estimate(scan, cfg_.ransac, ransac_rng_);
    current_.radar_inliers = est.inlier_count;
    current_.radar_degenerate = est.degenerate;
    if (!est.degenerate) {
      window_.add_factor(
          std::make_shared<RadarVelocityTerm>(id, omega, est.v, est.covariance, ext_));
      current_.radar_factor = true;
    }
  } catch (const RadarEstimationError&) {
    // factor skipped; IMU chain still holds the node
  }
  optimize_and_slide(true);
}

void OdometryPipeline::on_lidar(const LidarScan& scan) {
  if (!initialized_ || cfg_.mode == Mode::kRio) return;
  const double t_mid = scan.t_start + scan.period / 2;

  int node_id = -1;
  double node_t = 0.0;
  if (cfg_.mode == Mode::kLio) {
    if (t_mid <= last_node_t_) return;  // pre-init or overlapping-scan leftovers
    node_id = create_node(t_mid);
    node_t = t_mid;
  } else {
    // attach to the node whose timestamp lies inside the scan interval
    for (const auto& [id, node] : window_.nodes()) {
      if (node.t >= scan.t_start && node.t < scan.t_start + scan.period) {
        node_id = id;
        node_t = node.t;
      }
    }
    if (node_id < 0) return;  // no matching node; scan dropped
  }

  attach_lidar(scan, node_id, node_t);
  optimize_and_slide(cfg_.mode == Mode::kLio);

  if (cfg_.mode == Mode::kFused && !trajectory_.empty() &&
      trajectory_.back().t == last_node_t_) {
    // refine the already-emitted pose of this node with the LiDAR evidence
    trajectory_.back().T = window_.newest().state.T;
    velocity_log_.back().second = window_.newest().state.v;
    diagnostics_.back() = current_;
  }
}

void OdometryPipeline::attach_lidar(const LidarScan& scan, int node_id, double node_t) {
  const double t_end = scan.t_start + scan.period;

  // pose track: optimized node poses up to node_t, then IMU dead reckoning
  PoseTrack track;
  for (const auto& [id, node] : window_.nodes()) {
    if (node.t <= node_t) track.push_back({node.t, node.state.T});
  }
  NavState x = window_.nodes().at(node_id).state;
  const auto tail = imu_.between(node_t, t_end);
  for (size_t k = 0; k + 1 < tail.size(); ++k) {
    const double dt = tail[k + 1].t - tail[k].t;
    const Vec3 omega = 0.5 * (tail[k].angular_velocity + tail[k + 1].angular_velocity) - x.bg();
    const Vec3 f = 0.5 * (tail[k].specific_force + tail[k + 1].specific_force) - x.ba();
    const Vec3 a_w = x.T.R * f + gravity_w_;
    x.T.p += x.v * dt + 0.5 * a_w * dt * dt;
    x.v += a_w * dt;
    x.T.R = x.T.R * exp_so3(omega * dt);
    track.push_back({tail[k + 1].t, x.T});
  }

  std::vector<LidarPoint> deskewed;
  try {
    deskewed = deskew(scan, track, node_t, ext_.T_I_L);
  } catch (const MissingPoseCoverage&) {
    return;  // first scans after init may start before the track does
  }
  const FeatureCloud features = extract_features(deskewed, node_t, cfg_.lidar);
  const Pose guess = window_.nodes().at(node_id).state.T;

  if (!maps_.surfaces().empty() || !maps_.corners().empty()) {
    const Submap ssub = maps_.surface_submap(guess.p, cfg_.lidar.submap_half_width);
    const Submap csub = maps_.corner_submap(guess.p, cfg_.lidar.submap_half_width);
    const CorrespondenceSet corr =
        find_correspondences(features, ssub, csub, guess, cfg_.lidar);
    for (const auto& c : corr.planes) {
      window_.add_factor(std::make_shared<PlaneFactorTerm>(node_id, c, cfg_.lidar_sigma));
    }
    for (const auto& c : corr.lines) {
      window_.add_factor(std::make_shared<LineFactorTerm>(node_id, c, cfg_.lidar_sigma));
    }
    current_.plane_factors = static_cast<int>(corr.planes.size());
    current_.line_factors = static_cast<int>(corr.lines.size());
  }
  pending_map_updates_.push_back({node_id, features});
}

void OdometryPipeline::optimize_and_slide(bool emit) {
  const OptimizeResult res = window_.optimize(cfg_.optimizer);
  window_.marginalize_before(window_.newest().t - cfg_.lag);

  for (const auto& [id, fc] : pending_map_updates_) {
    auto it = window_.nodes().find(id);
    if (it != window_.nodes().end()) maps_.update(fc, it->second.state.T);
  }
  pending_map_updates_.clear();

  const GraphNode& newest = window_.newest();
  current_.t = newest.t;
  current_.factor_count = static_cast<int>(window_.factors().size());
  current_.cost = res.final_cost;
  current_.iterations = res.iterations;
  current_.diverged = res.diverged;
  // Measurement factors only: the marginal prior carries tight position
  // information over the short lag and would mask directions the current
  // sensor geometry fails to constrain.
  const auto info = window_.marginal_information(newest.id, cfg_.optimizer, false);
  Eigen::SelfAdjointEigenSolver<Mat3> eig(info.block<3, 3>(kIdxPos, kIdxPos));
  const double lmax = eig.eigenvalues()(2);
  current_.degeneracy_ratio = lmax > 0 ? std::max(eig.eigenvalues()(0), 0.0) / lmax : 0.0;

  if (emit) {
    trajectory_.push_back({newest.t, newest.state.T});
    velocity_log_.push_back({newest.t, newest.state.v});
    diagnostics_.push_back(current_);
  }
}

std::pair<double, NavState> OdometryPipeline::latest_state() const {
  if (!initialized_) throw NotInitialized();
  return {window_.newest().t, window_.newest().state};
}

RunResult run_dataset(const std::vector<ImuSample>& imu, const std::vector<RadarScan>& radar,
                      const std::vector<LidarScan>& lidar, const PipelineConfig& cfg,
                      const Extrinsics& ext) {
  struct Event {
    double t;
    int kind;  // 0 imu, 1 radar, 2 lidar
    size_t index;
  };
  std::vector<Event> events;
  events.reserve(imu.size() + radar.size() + lidar.size());
  for (size_t i = 0; i < imu.size(); ++i) events.push_back({imu[i].t, 0, i});
  for (size_t i = 0; i < radar.size(); ++i) events.push_back({radar[i].t, 1, i});
  for (size_t i = 0; i < lidar.size(); ++i) {
    events.push_back({lidar[i].t_start + lidar[i].period, 2, i});
  }
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.kind < b.kind;
  });

  OdometryPipeline pipeline(cfg, ext);
  for (const Event& e : events) {
    switch (e.kind) {
      case 0: pipeline.on_imu(imu[e.index]); break;
      case 1: pipeline.on_radar(radar[e.index]); break;
      case 2: pipeline.on_lidar(lidar[e.index]); break;
    }
  }

  RunResult out;
  out.trajectory = pipeline.trajectory();
  out.diagnostics = pipeline.diagnostics();
  out.velocities = pipeline.velocity_log();
  out.init = pipeline.init_result();
  return out;
}

}  // namespace lro
