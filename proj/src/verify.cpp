#include "lro/verify.hpp"

#include <Eigen/Eigenvalues>
#include <memory>
#include <random>
#include <sstream>

#include "lro/graph.hpp"
#include "lro/lidar_pipeline.hpp"
#include "lro/radar_velocity.hpp"

namespace lro {

namespace {

using StateVec = Eigen::Matrix<double, kStateDim, 1>;

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << std::scientific << v;
  return ss.str();
}

CheckResult check(const std::string& name, bool passed, const std::string& detail) {
  return {name, passed, detail};
}

Vec3 random_vec(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  return Vec3(n(rng), n(rng), n(rng));
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v(n(rng), n(rng), n(rng));
  while (v.norm() < 1e-6) v = Vec3(n(rng), n(rng), n(rng));
  return v.normalized();
}

/// Rotation angles stay below 2 rad: the analytical Jacobians are exact
/// everywhere, but the central-difference oracle itself loses accuracy as the
/// log map approaches the pi cut.
NavState random_state(std::mt19937_64& rng) {
  NavState x;
  std::uniform_real_distribution<double> ang(0.0, 2.0);
  x.T.R = exp_so3(ang(rng) * random_unit(rng));
  x.T.p = random_vec(rng, 5.0);
  x.v = random_vec(rng, 2.0);
  x.b.head<3>() = random_vec(rng, 0.05);
  x.b.tail<3>() = random_vec(rng, 0.01);
  return x;
}

/// Central finite differences of a factor residual w.r.t. one node under the
/// right-perturbation retraction.
template <typename F>
Eigen::MatrixXd numeric_jacobian(const F& residual_of, const NavState& x, int rows,
                                 double h = 1e-6) {
  Eigen::MatrixXd J(rows, kStateDim);
  for (int k = 0; k < kStateDim; ++k) {
    StateVec d = StateVec::Zero();
    d(k) = h;
    const Eigen::VectorXd rp = residual_of(retract_state(x, d));
    d(k) = -h;
    const Eigen::VectorXd rm = residual_of(retract_state(x, d));
    J.col(k) = (rp - rm) / (2 * h);
  }
  return J;
}

double max_rel_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& numeric) {
  double worst = 0.0;
  for (int r = 0; r < analytic.rows(); ++r) {
    for (int c = 0; c < analytic.cols(); ++c) {
      const double denom = std::max(1.0, std::abs(numeric(r, c)));
      worst = std::max(worst, std::abs(analytic(r, c) - numeric(r, c)) / denom);
    }
  }
  return worst;
}

ImuPreintegration random_preint(std::mt19937_64& rng, const Vec6& bias) {
  std::vector<ImuSample> samples;
  const Vec3 omega = random_vec(rng, 0.5);
  const Vec3 accel = random_vec(rng, 1.0) + Vec3(0, 0, 9.81);
  for (int k = 0; k <= 20; ++k) {
    samples.push_back({0.005 * k, omega + bias.tail<3>(), accel + bias.head<3>()});
  }
  return ImuPreintegration::integrate(samples, bias, ImuNoise{});
}

RadarScan random_radar_scan(std::mt19937_64& rng, const Vec3& v, int n, double sigma,
                            double outlier_fraction) {
  std::normal_distribution<double> noise(0.0, sigma);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  RadarScan scan;
  const int n_outliers = static_cast<int>(outlier_fraction * n);
  for (int i = 0; i < n; ++i) {
    const Vec3 b = random_unit(rng);
    RadarPoint p;
    p.position = b * (1.0 + 9.0 * u01(rng));
    p.radial_speed = -b.dot(v) + (sigma > 0 ? noise(rng) : 0.0);
    if (i < n_outliers) {
      p.radial_speed += (u01(rng) < 0.5 ? -1.0 : 1.0) * (1.0 + u01(rng));
    }
    scan.points.push_back(p);
  }
  return scan;
}

}  // namespace

std::vector<CheckResult> verify_factor_jacobians(uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  const double tol = 1e-5;
  double worst_prior = 0, worst_imu = 0, worst_plane = 0, worst_line = 0, worst_radar = 0;

  for (int t = 0; t < trials; ++t) {
    // prior
    {
      const NavState x = random_state(rng);
      const NavState prior = random_state(rng);
      Eigen::Matrix<double, kStateDim, kStateDim> cov =
          Eigen::Matrix<double, kStateDim, kStateDim>::Identity();
      const auto f = prior_factor(0, x, prior, cov);
      const auto num = numeric_jacobian(
          [&](const NavState& s) { return prior_factor(0, s, prior, cov).residual; }, x,
          kStateDim);
      worst_prior = std::max(worst_prior, max_rel_error(f.jacobians[0].second, num));
    }
    // imu
    {
      const NavState xi = random_state(rng);
      Vec6 bias_lin = Vec6::Zero();
      bias_lin.head<3>() = random_vec(rng, 0.05);
      bias_lin.tail<3>() = random_vec(rng, 0.01);
      const auto preint = random_preint(rng, bias_lin);
      const Vec3 g(0, 0, -9.81);
      NavState xj = preint.predict(xi, g);
      StateVec d;
      for (int k = 0; k < kStateDim; ++k) d(k) = 0.1 * std::normal_distribution<double>()(rng);
      xj = retract_state(xj, d);
      const auto f = imu_factor(0, 1, xi, xj, preint, g);
      const auto num_i = numeric_jacobian(
          [&](const NavState& s) { return imu_factor(0, 1, s, xj, preint, g).residual; },
          xi, 9);
      const auto num_j = numeric_jacobian(
          [&](const NavState& s) { return imu_factor(0, 1, xi, s, preint, g).residual; },
          xj, 9);
      worst_imu = std::max(worst_imu, max_rel_error(f.jacobians[0].second, num_i));
      worst_imu = std::max(worst_imu, max_rel_error(f.jacobians[1].second, num_j));
    }
    // plane and line
    {
      const NavState x = random_state(rng);
      PlaneCorrespondence pc{random_vec(rng, 3.0), random_vec(rng, 5.0), random_unit(rng)};
      const auto fp = point_to_plane_factor(0, x, pc, 0.05);
      const auto nump = numeric_jacobian(
          [&](const NavState& s) { return point_to_plane_factor(0, s, pc, 0.05).residual; },
          x, 3);
      worst_plane = std::max(worst_plane, max_rel_error(fp.jacobians[0].second, nump));

      LineCorrespondence lc{random_vec(rng, 3.0), random_vec(rng, 5.0), random_unit(rng)};
      const auto fl = point_to_line_factor(0, x, lc, 0.05);
      const auto numl = numeric_jacobian(
          [&](const NavState& s) { return point_to_line_factor(0, s, lc, 0.05).residual; },
          x, 3);
      worst_line = std::max(worst_line, max_rel_error(fl.jacobians[0].second, numl));
    }
    // radar velocity
    {
      const NavState x = random_state(rng);
      Extrinsics ext;
      ext.T_I_R = Pose{exp_so3(random_vec(rng, 0.3)), random_vec(rng, 0.2)};
      const Vec3 omega = random_vec(rng, 0.5);
      const Vec3 v_tilde = random_vec(rng, 1.0);
      const auto f = radar_velocity_factor(0, x, omega, v_tilde, Mat3::Identity(), ext);
      const auto num = numeric_jacobian(
          [&](const NavState& s) {
            return radar_velocity_factor(0, s, omega, v_tilde, Mat3::Identity(), ext)
                .residual;
          },
          x, 3);
      worst_radar = std::max(worst_radar, max_rel_error(f.jacobians[0].second, num));
    }
  }

  return {
      check("jacobian.prior", worst_prior < tol, "max rel err " + fmt(worst_prior)),
      check("jacobian.imu", worst_imu < tol, "max rel err " + fmt(worst_imu)),
      check("jacobian.plane", worst_plane < tol, "max rel err " + fmt(worst_plane)),
      check("jacobian.line", worst_line < tol, "max rel err " + fmt(worst_line)),
      check("jacobian.radar", worst_radar < tol, "max rel err " + fmt(worst_radar)),
  };
}

std::vector<CheckResult> verify_radar_velocity(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CheckResult> out;

  // exact recovery from clean 50-point scans
  double worst_clean = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Vec3 v = random_vec(rng, 2.0);
    const RadarScan scan = random_radar_scan(rng, v, 50, 0.0, 0.0);
    const Vec3 v_hat = solve_ls(build_system(scan));
    worst_clean = std::max(worst_clean, (v_hat - v).norm());
  }
  out.push_back(check("radar.noiseless_exact", worst_clean < 1e-9,
                      "worst |v_hat - v| " + fmt(worst_clean)));

  // robustness: sigma 0.1, 20% dynamic outliers with >= 1 m/s doppler offset
  RansacParams params;
  int good = 0;
  const int trials = 500;
  for (int t = 0; t < trials; ++t) {
    const Vec3 v = random_vec(rng, 1.5);
    const RadarScan scan = random_radar_scan(rng, v, 50, 0.1, 0.2);
    std::mt19937_64 rrng(seed * 977 + t);
    try {
      const VelocityEstimate est = ransac_estimate(scan, params, rrng);
      if ((est.v - v).cwiseAbs().maxCoeff() < 0.15) ++good;
    } catch (const Error&) {
      // counted as a failure for this trial
    }
  }
  out.push_back(check("radar.ransac_outliers",
                      good >= static_cast<int>(0.95 * trials),
                      std::to_string(good) + "/" + std::to_string(trials) +
                          " trials within 0.15 m/s per axis"));

  // covariance calibration against Monte-Carlo spread (isotropic bearings)
  const Vec3 v_mc(1.0, -0.5, 0.3);
  Vec3 mean = Vec3::Zero();
  std::vector<Vec3> errs;
  Mat3 predicted = Mat3::Zero();
  const int mc = 2000;
  for (int t = 0; t < mc; ++t) {
    const RadarScan scan = random_radar_scan(rng, v_mc, 50, 0.1, 0.0);
    const auto sys = build_system(scan);
    const Vec3 v_hat = solve_ls(sys);
    predicted += estimate_covariance(sys, v_hat);
    errs.push_back(v_hat - v_mc);
    mean += errs.back();
  }
  mean /= mc;
  predicted /= mc;
  Vec3 sample_var = Vec3::Zero();
  for (const Vec3& e : errs) sample_var += (e - mean).cwiseAbs2();
  sample_var /= (mc - 1.0);
  double worst_ratio = 0.0;
  for (int d = 0; d < 3; ++d) {
    const double r = sample_var(d) / predicted(d, d);
    worst_ratio = std::max(worst_ratio, std::max(r, 1.0 / r));
  }
  out.push_back(check("radar.covariance_calibration", worst_ratio < 2.0,
                      "worst variance ratio " + fmt(worst_ratio)));
  return out;
}

std::vector<CheckResult> verify_preintegration(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CheckResult> out;
  const ImuNoise noise;

  // constant specific force, no rotation: dv = a*T, dp = a*T^2/2
  {
    const Vec3 a(0.7, -0.3, 1.1);
    std::vector<ImuSample> samples;
    for (int k = 0; k <= 1000; ++k) samples.push_back({1e-3 * k, Vec3::Zero(), a});
    const auto pre = ImuPreintegration::integrate(samples, Vec6::Zero(), noise);
    const double ev = (pre.delta_v() - a).norm();
    const double ep = (pre.delta_p() - 0.5 * a).norm();
    out.push_back(check("preint.constant_accel", ev < 1e-6 && ep < 1e-6,
                        "dv err " + fmt(ev) + ", dp err " + fmt(ep)));
  }
  // constant rotation rate, no acceleration: dR = Exp(w*T)
  {
    const Vec3 w(0.4, 0.2, -0.9);
    std::vector<ImuSample> samples;
    for (int k = 0; k <= 1000; ++k) samples.push_back({1e-3 * k, w, Vec3::Zero()});
    const auto pre = ImuPreintegration::integrate(samples, Vec6::Zero(), noise);
    const double er = log_so3(exp_so3(w).transpose() * pre.delta_R()).norm();
    out.push_back(check("preint.constant_rotation", er < 1e-6, "dR err " + fmt(er)));
  }
  // factor residual vanishes at the predicted state
  {
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      NavState xi;
      xi.T.R = exp_so3(random_vec(rng, 0.5));
      xi.T.p = random_vec(rng, 3.0);
      xi.v = random_vec(rng, 1.0);
      xi.b.head<3>() = random_vec(rng, 0.05);
      xi.b.tail<3>() = random_vec(rng, 0.01);
      const auto pre = random_preint(rng, xi.b);
      const Vec3 g(0, 0, -9.81);
      const NavState xj = pre.predict(xi, g);
      worst = std::max(worst,
                       imu_factor(0, 1, xi, xj, pre, g).residual.cwiseAbs().maxCoeff());
    }
    out.push_back(
        check("preint.residual_at_prediction", worst < 1e-9, "worst residual " + fmt(worst)));
  }
  return out;
}

std::vector<CheckResult> verify_deskew() {
  // constant-velocity 1 m/s sweep of the plane x = 2, 0.1 s scan
  const Vec3 vel(1.0, 0.0, 0.0);
  const double scan_dt = 0.1;
  LidarScan scan;
  scan.t_start = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double dt = scan_dt * i / 200.0;
    const Vec3 origin = vel * dt;
    const double az = -0.6 + 1.2 * i / 200.0;
    for (const double el : {-0.15, 0.0, 0.15}) {
      const Vec3 dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                     std::sin(el));
      const double range = (2.0 - origin.x()) / dir.x();
      LidarPoint p;
      p.position = dir * range;  // sensor frame at capture time
      p.dt = dt;
      p.ring = 0;
      scan.points.push_back(p);
    }
  }

  auto plane_rms = [](const std::vector<Vec3>& pts) {
    Vec3 mean = Vec3::Zero();
    for (const Vec3& p : pts) mean += p;
    mean /= pts.size();
    Mat3 cov = Mat3::Zero();
    for (const Vec3& p : pts) cov += (p - mean) * (p - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    return std::sqrt(std::max(eig.eigenvalues()(0), 0.0) / pts.size());
  };

  std::vector<Vec3> raw;
  for (const auto& p : scan.points) raw.push_back(p.position);

  const PoseTrack track = {{0.0, Pose{Mat3::Identity(), Vec3::Zero()}},
                           {scan_dt, Pose{Mat3::Identity(), vel * scan_dt}}};
  const auto deskewed = deskew(scan, track, 0.0, Pose::identity());
  std::vector<Vec3> corrected;
  for (const auto& p : deskewed) corrected.push_back(p.position);

  const double rms_skewed = plane_rms(raw);
  const double rms_deskewed = plane_rms(corrected);
  return {check("deskew.plane_rms", rms_deskewed < 1e-6 && rms_skewed > 1e-3,
                "deskewed " + fmt(rms_deskewed) + ", skewed " + fmt(rms_skewed))};
}

std::vector<CheckResult> verify_fixed_lag(uint64_t seed) {
  std::mt19937_64 rng(seed);
  // linear-Gaussian 3-node chain: all rotations at identity, a tight prior on
  // node 0, bias random walk links, and a loose full-state observation per
  // node; the fixed-lag estimate of the newest node must match full batch
  OptimizerConfig cfg;
  cfg.max_iterations = 50;
  cfg.step_tolerance = 1e-12;
  const ImuNoise noise;

  std::vector<NavState> obs(3);
  for (auto& o : obs) {
    o.T.p = random_vec(rng, 1.0);
    o.v = random_vec(rng, 0.5);
    o.b.head<3>() = random_vec(rng, 0.02);
    o.b.tail<3>() = random_vec(rng, 0.005);
  }
  Eigen::Matrix<double, kStateDim, kStateDim> tight =
      Eigen::Matrix<double, kStateDim, kStateDim>::Identity() * 1e-4;
  Eigen::Matrix<double, kStateDim, kStateDim> loose =
      Eigen::Matrix<double, kStateDim, kStateDim>::Identity() * 1.0;

  // batch
  FactorGraphWindow batch;
  std::vector<int> bid;
  for (int k = 0; k < 3; ++k) bid.push_back(batch.add_node(k, NavState{}));
  batch.add_factor(std::make_shared<PriorFactorTerm>(bid[0], obs[0], tight));
  for (int k = 0; k < 3; ++k) {
    batch.add_factor(std::make_shared<PriorFactorTerm>(bid[k], obs[k], loose));
  }
  for (int k = 0; k < 2; ++k) {
    batch.add_factor(std::make_shared<BiasWalkTerm>(bid[k], bid[k + 1], 1.0, noise));
  }
  batch.optimize(cfg);

  // fixed lag: optimize, slide node 0 out, extend, optimize again
  FactorGraphWindow lagged;
  std::vector<int> lid;
  for (int k = 0; k < 2; ++k) lid.push_back(lagged.add_node(k, NavState{}));
  lagged.add_factor(std::make_shared<PriorFactorTerm>(lid[0], obs[0], tight));
  lagged.add_factor(std::make_shared<PriorFactorTerm>(lid[0], obs[0], loose));
  lagged.add_factor(std::make_shared<PriorFactorTerm>(lid[1], obs[1], loose));
  lagged.add_factor(std::make_shared<BiasWalkTerm>(lid[0], lid[1], 1.0, noise));
  lagged.optimize(cfg);
  lagged.marginalize_before(0.5);
  const int id2 = lagged.add_node(2, NavState{});
  lagged.add_factor(std::make_shared<PriorFactorTerm>(id2, obs[2], loose));
  lagged.add_factor(std::make_shared<BiasWalkTerm>(lid[1], id2, 1.0, noise));
  lagged.optimize(cfg);

  const auto diff =
      local_state(batch.nodes().at(bid[2]).state, lagged.nodes().at(id2).state);
  const double err = diff.cwiseAbs().maxCoeff();
  return {check("fixed_lag.matches_batch", err < 1e-9, "newest state diff " + fmt(err))};
}

std::vector<CheckResult> verify_all() {
  std::vector<CheckResult> all;
  for (const auto& suite :
       {verify_factor_jacobians(), verify_radar_velocity(), verify_preintegration(),
        verify_deskew(), verify_fixed_lag()}) {
    all.insert(all.end(), suite.begin(), suite.end());
  }
  return all;
}

}  // namespace lro
