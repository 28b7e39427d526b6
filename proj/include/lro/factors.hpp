#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lro/geometry.hpp"
#include "lro/sensor_types.hpp"

namespace lro {

/// Per-node estimation state: IMU pose in world, world-frame velocity and
/// IMU biases (accelerometer first, gyroscope second).
struct NavState {
  Pose T;
  Vec3 v = Vec3::Zero();
  Vec6 b = Vec6::Zero();

  Vec3 ba() const { return b.head<3>(); }
  Vec3 bg() const { return b.tail<3>(); }
};

/// Tangent ordering of the 15-dof state: [dtheta, dp, dv, dba, dbg].
constexpr int kStateDim = 15;
constexpr int kIdxTheta = 0;
constexpr int kIdxPos = 3;
constexpr int kIdxVel = 6;
constexpr int kIdxBa = 9;
constexpr int kIdxBg = 12;

NavState retract_state(const NavState& x, const Eigen::Matrix<double, kStateDim, 1>& d);
Eigen::Matrix<double, kStateDim, 1> local_state(const NavState& a, const NavState& b);

/// Residual, per-node Jacobian blocks and noise covariance: the uniform
/// currency consumed by the sliding-window optimizer.
struct FactorEvaluation {
  Eigen::VectorXd residual;
  std::vector<std::pair<int, Eigen::MatrixXd>> jacobians;  // (node id, r x 15)
  Eigen::MatrixXd covariance;
  bool robust = false;  // Huber-weighted by the optimizer
};

struct ImuNoise {
  double gyro_noise_density = 1.7e-4;   // rad/s/sqrt(Hz)
  double accel_noise_density = 2.0e-3;  // m/s^2/sqrt(Hz)
  double gyro_bias_walk = 1.0e-5;       // rad/s^2/sqrt(Hz)
  double accel_bias_walk = 3.0e-4;      // m/s^3/sqrt(Hz)
  double init_bias_cov = 1e-4;
};

/// Accumulated on-manifold IMU preintegration between two graph nodes,
/// linearized at a fixed bias, with first-order bias-correction Jacobians.
/// Covariance ordering is (dtheta, dv, dp).
class ImuPreintegration {
 public:
  ImuPreintegration() { cov_.setZero(); }

  /// Integrates time-ordered samples (midpoint rule between consecutive
  /// samples). Throws EmptySampleSet when fewer than two samples are given.
  static ImuPreintegration integrate(const std::vector<ImuSample>& samples,
                                     const Vec6& bias, const ImuNoise& noise);

  /// Delta terms corrected to first order for a bias differing from the
  /// linearization point.
  void corrected(const Vec6& bias, Mat3* dR, Vec3* dv, Vec3* dp) const;

  /// IMU-predicted state at the end of the interval.
  NavState predict(const NavState& x_i, const Vec3& gravity_w) const;

  const Mat3& delta_R() const { return dR_; }
  const Vec3& delta_v() const { return dv_; }
  const Vec3& delta_p() const { return dp_; }
  double delta_t() const { return dt_; }
  const Eigen::Matrix<double, 9, 9>& covariance() const { return cov_; }
  const Vec6& bias_lin() const { return bias_lin_; }
  const Mat3& J_R_bg() const { return J_R_bg_; }
  const Mat3& J_v_ba() const { return J_v_ba_; }
  const Mat3& J_v_bg() const { return J_v_bg_; }
  const Mat3& J_p_ba() const { return J_p_ba_; }
  const Mat3& J_p_bg() const { return J_p_bg_; }

 private:
  void propagate(double dt, const Vec3& omega, const Vec3& accel, const ImuNoise& noise);

  Mat3 dR_ = Mat3::Identity();
  Vec3 dv_ = Vec3::Zero();
  Vec3 dp_ = Vec3::Zero();
  double dt_ = 0.0;
  Eigen::Matrix<double, 9, 9> cov_;
  Vec6 bias_lin_ = Vec6::Zero();
  Mat3 J_R_bg_ = Mat3::Zero();
  Mat3 J_v_ba_ = Mat3::Zero();
  Mat3 J_v_bg_ = Mat3::Zero();
  Mat3 J_p_ba_ = Mat3::Zero();
  Mat3 J_p_bg_ = Mat3::Zero();
};

struct PlaneCorrespondence {
  Vec3 point_I;    // feature point, IMU frame
  Vec3 anchor_W;   // point on the plane
  Vec3 normal_W;   // unit plane normal
};

struct LineCorrespondence {
  Vec3 point_I;
  Vec3 anchor_W;
  Vec3 direction_W;  // unit line direction
};

/// 9-dof preintegrated IMU factor between nodes i and j.
FactorEvaluation imu_factor(int id_i, int id_j, const NavState& x_i, const NavState& x_j,
                            const ImuPreintegration& preint, const Vec3& gravity_w);

/// Bias random walk between consecutive nodes; keeps biases observable.
FactorEvaluation bias_walk_factor(int id_i, int id_j, const NavState& x_i,
                                  const NavState& x_j, double dt, const ImuNoise& noise);

FactorEvaluation point_to_plane_factor(int id, const NavState& x,
                                       const PlaneCorrespondence& corr, double sigma);

FactorEvaluation point_to_line_factor(int id, const NavState& x,
                                      const LineCorrespondence& corr, double sigma);

/// Radar ego-velocity factor: predicted radar-frame velocity from the state
/// and the gyro measurement, minus the scan-level least-squares estimate.
FactorEvaluation radar_velocity_factor(int id, const NavState& x, const Vec3& omega_meas,
                                       const Vec3& v_tilde, const Mat3& covariance,
                                       const Extrinsics& ext);

/// 15-dof prior; residual is local_state(prior, state).
FactorEvaluation prior_factor(int id, const NavState& x, const NavState& prior,
                              const Eigen::Matrix<double, kStateDim, kStateDim>& covariance);

/// IRLS reweighting form of the Huber loss on a whitened residual norm.
double huber_weight(double whitened_norm, double delta);

}  // namespace lro
