#include "lro/factors.hpp"

#include <cmath>

namespace lro {

NavState retract_state(const NavState& x, const Eigen::Matrix<double, kStateDim, 1>& d) {
  NavState out;
  out.T = retract(x.T, d.segment<3>(kIdxTheta), d.segment<3>(kIdxPos));
  out.v = x.v + d.segment<3>(kIdxVel);
  out.b = x.b + d.segment<6>(kIdxBa);
  return out;
}

Eigen::Matrix<double, kStateDim, 1> local_state(const NavState& a, const NavState& b) {
  Eigen::Matrix<double, kStateDim, 1> d;
  const Vec6 dpose = local(a.T, b.T);
  d.segment<3>(kIdxTheta) = dpose.head<3>();
  d.segment<3>(kIdxPos) = dpose.tail<3>();
  d.segment<3>(kIdxVel) = b.v - a.v;
  d.segment<6>(kIdxBa) = b.b - a.b;
  return d;
}

ImuPreintegration ImuPreintegration::integrate(const std::vector<ImuSample>& samples,
                                               const Vec6& bias, const ImuNoise& noise) {
  if (samples.empty()) throw EmptySampleSet();
  ImuPreintegration p;
  p.bias_lin_ = bias;
  for (size_t k = 0; k + 1 < samples.size(); ++k) {
    const double dt = samples[k + 1].t - samples[k].t;
    if (dt <= 0.0) continue;
    const Vec3 omega =
        0.5 * (samples[k].angular_velocity + samples[k + 1].angular_velocity) - bias.tail<3>();
    const Vec3 accel =
        0.5 * (samples[k].specific_force + samples[k + 1].specific_force) - bias.head<3>();
    p.propagate(dt, omega, accel, noise);
  }
  return p;
}

void ImuPreintegration::propagate(double dt, const Vec3& omega, const Vec3& accel,
                                  const ImuNoise& noise) {
  const Mat3 dRk = exp_so3(omega * dt);
  const Mat3 Jr = right_jacobian_so3(omega * dt);
  const Mat3 a_hat = skew(accel);

  // covariance and bias-Jacobian propagation use the pre-update deltas
  Eigen::Matrix<double, 9, 9> A = Eigen::Matrix<double, 9, 9>::Identity();
  A.block<3, 3>(0, 0) = dRk.transpose();
  A.block<3, 3>(3, 0) = -dR_ * a_hat * dt;
  A.block<3, 3>(6, 0) = -0.5 * dR_ * a_hat * dt * dt;
  A.block<3, 3>(6, 3) = Mat3::Identity() * dt;

  Eigen::Matrix<double, 9, 6> B = Eigen::Matrix<double, 9, 6>::Zero();
  B.block<3, 3>(0, 0) = Jr * dt;
  B.block<3, 3>(3, 3) = dR_ * dt;
  B.block<3, 3>(6, 3) = 0.5 * dR_ * dt * dt;

  Eigen::Matrix<double, 6, 6> Q = Eigen::Matrix<double, 6, 6>::Zero();
  const double sg2 = noise.gyro_noise_density * noise.gyro_noise_density / dt;
  const double sa2 = noise.accel_noise_density * noise.accel_noise_density / dt;
  Q.block<3, 3>(0, 0) = sg2 * Mat3::Identity();
  Q.block<3, 3>(3, 3) = sa2 * Mat3::Identity();

  cov_ = A * cov_ * A.transpose() + B * Q * B.transpose();

  J_p_ba_ += J_v_ba_ * dt - 0.5 * dR_ * dt * dt;
  J_p_bg_ += J_v_bg_ * dt - 0.5 * dR_ * a_hat * J_R_bg_ * dt * dt;
  J_v_ba_ += -dR_ * dt;
  J_v_bg_ += -dR_ * a_hat * J_R_bg_ * dt;
  J_R_bg_ = dRk.transpose() * J_R_bg_ - Jr * dt;

  dp_ += dv_ * dt + 0.5 * dR_ * accel * dt * dt;
  dv_ += dR_ * accel * dt;
  dR_ = dR_ * dRk;
  dt_ += dt;
}

void ImuPreintegration::corrected(const Vec6& bias, Mat3* dR, Vec3* dv, Vec3* dp) const {
  const Vec3 dba = bias.head<3>() - bias_lin_.head<3>();
  const Vec3 dbg = bias.tail<3>() - bias_lin_.tail<3>();
  *dR = dR_ * exp_so3(J_R_bg_ * dbg);
  *dv = dv_ + J_v_ba_ * dba + J_v_bg_ * dbg;
  *dp = dp_ + J_p_ba_ * dba + J_p_bg_ * dbg;
}

NavState ImuPreintegration::predict(const NavState& x_i, const Vec3& gravity_w) const {
  Mat3 dR;
  Vec3 dv, dp;
  corrected(x_i.b, &dR, &dv, &dp);
  NavState x_j;
  x_j.T.R = x_i.T.R * dR;
  x_j.v = x_i.v + gravity_w * dt_ + x_i.T.R * dv;
  x_j.T.p = x_i.T.p + x_i.v * dt_ + 0.5 * gravity_w * dt_ * dt_ + x_i.T.R * dp;
  x_j.b = x_i.b;
  return x_j;
}

FactorEvaluation imu_factor(int id_i, int id_j, const NavState& x_i, const NavState& x_j,
                            const ImuPreintegration& preint, const Vec3& gravity_w) {
  Mat3 dR_corr;
  Vec3 dv_corr, dp_corr;
  preint.corrected(x_i.b, &dR_corr, &dv_corr, &dp_corr);

  const Mat3& Ri = x_i.T.R;
  const Mat3& Rj = x_j.T.R;
  const Mat3 RiT = Ri.transpose();
  const double dt = preint.delta_t();

  const Vec3 e_R = log_so3(dR_corr.transpose() * RiT * Rj);
  const Vec3 dv_est = RiT * (x_j.v - x_i.v - gravity_w * dt);
  const Vec3 dp_est = RiT * (x_j.T.p - x_i.T.p - x_i.v * dt - 0.5 * gravity_w * dt * dt);
  const Vec3 e_v = dv_est - dv_corr;
  const Vec3 e_p = dp_est - dp_corr;

  FactorEvaluation f;
  f.residual.resize(9);
  f.residual << e_R, e_v, e_p;
  f.covariance = preint.covariance();

  const Mat3 Jr_inv_eR = right_jacobian_inv_so3(e_R);
  const Vec3 dbg = x_i.b.tail<3>() - preint.bias_lin().tail<3>();

  Eigen::MatrixXd Ji = Eigen::MatrixXd::Zero(9, kStateDim);
  Eigen::MatrixXd Jj = Eigen::MatrixXd::Zero(9, kStateDim);

  // rotation rows
  Ji.block<3, 3>(0, kIdxTheta) = -Jr_inv_eR * Rj.transpose() * Ri;
  Ji.block<3, 3>(0, kIdxBg) = -Jr_inv_eR * exp_so3(e_R).transpose() *
                              right_jacobian_so3(preint.J_R_bg() * dbg) * preint.J_R_bg();
  Jj.block<3, 3>(0, kIdxTheta) = Jr_inv_eR;

  // velocity rows
  Ji.block<3, 3>(3, kIdxTheta) = skew(dv_est);
  Ji.block<3, 3>(3, kIdxVel) = -RiT;
  Ji.block<3, 3>(3, kIdxBa) = -preint.J_v_ba();
  Ji.block<3, 3>(3, kIdxBg) = -preint.J_v_bg();
  Jj.block<3, 3>(3, kIdxVel) = RiT;

  // position rows
  Ji.block<3, 3>(6, kIdxTheta) = skew(dp_est);
  Ji.block<3, 3>(6, kIdxPos) = -Mat3::Identity();
  Ji.block<3, 3>(6, kIdxVel) = -RiT * dt;
  Ji.block<3, 3>(6, kIdxBa) = -preint.J_p_ba();
  Ji.block<3, 3>(6, kIdxBg) = -preint.J_p_bg();
  Jj.block<3, 3>(6, kIdxPos) = RiT * Rj;

  f.jacobians.emplace_back(id_i, std::move(Ji));
  f.jacobians.emplace_back(id_j, std::move(Jj));
  return f;
}

FactorEvaluation bias_walk_factor(int id_i, int id_j, const NavState& x_i,
                                  const NavState& x_j, double dt, const ImuNoise& noise) {
  FactorEvaluation f;
  f.residual = x_j.b - x_i.b;
  f.covariance = Eigen::MatrixXd::Zero(6, 6);
  const double qa = noise.accel_bias_walk * noise.accel_bias_walk * std::max(dt, 1e-6);
  const double qg = noise.gyro_bias_walk * noise.gyro_bias_walk * std::max(dt, 1e-6);
  f.covariance.block<3, 3>(0, 0) = qa * Mat3::Identity();
  f.covariance.block<3, 3>(3, 3) = qg * Mat3::Identity();
  Eigen::MatrixXd Ji = Eigen::MatrixXd::Zero(6, kStateDim);
  Eigen::MatrixXd Jj = Eigen::MatrixXd::Zero(6, kStateDim);
  Ji.block<6, 6>(0, kIdxBa) = -Eigen::Matrix<double, 6, 6>::Identity();
  Jj.block<6, 6>(0, kIdxBa) = Eigen::Matrix<double, 6, 6>::Identity();
  f.jacobians.emplace_back(id_i, std::move(Ji));
  f.jacobians.emplace_back(id_j, std::move(Jj));
  return f;
}

FactorEvaluation point_to_plane_factor(int id, const NavState& x,
                                       const PlaneCorrespondence& corr, double sigma) {
  const Vec3 i_w = x.T * corr.point_I;
  const Vec3& n = corr.normal_W;
  FactorEvaluation f;
  f.residual = ((i_w - corr.anchor_W).dot(n)) * n;
  f.covariance = sigma * sigma * Mat3::Identity();
  f.robust = true;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3, kStateDim);
  J.block<3, 3>(0, kIdxTheta) = n * n.transpose() * (-x.T.R * skew(corr.point_I));
  J.block<3, 3>(0, kIdxPos) = n * n.transpose() * x.T.R;
  f.jacobians.emplace_back(id, std::move(J));
  return f;
}

FactorEvaluation point_to_line_factor(int id, const NavState& x,
                                      const LineCorrespondence& corr, double sigma) {
  const Vec3 i_w = x.T * corr.point_I;
  const Vec3& d = corr.direction_W;
  const Vec3 delta = i_w - corr.anchor_W;
  const Mat3 P = Mat3::Identity() - d * d.transpose();
  FactorEvaluation f;
  f.residual = P * delta;
  f.covariance = sigma * sigma * Mat3::Identity();
  f.robust = true;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3, kStateDim);
  J.block<3, 3>(0, kIdxTheta) = P * (-x.T.R * skew(corr.point_I));
  J.block<3, 3>(0, kIdxPos) = P * x.T.R;
  f.jacobians.emplace_back(id, std::move(J));
  return f;
}

FactorEvaluation radar_velocity_factor(int id, const NavState& x, const Vec3& omega_meas,
                                       const Vec3& v_tilde, const Mat3& covariance,
                                       const Extrinsics& ext) {
  const Mat3 R_RI = ext.T_I_R.R.transpose();
  const Vec3& p_IR = ext.T_I_R.p;
  const Mat3 R_IW = x.T.R.transpose();
  const Vec3 v_body = R_IW * x.v;

  FactorEvaluation f;
  f.residual = R_RI * (v_body + (omega_meas - x.bg()).cross(p_IR)) - v_tilde;
  f.covariance = covariance;
  f.robust = true;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3, kStateDim);
  J.block<3, 3>(0, kIdxTheta) = R_RI * skew(v_body);
  J.block<3, 3>(0, kIdxVel) = R_RI * R_IW;
  J.block<3, 3>(0, kIdxBg) = R_RI * skew(p_IR);
  f.jacobians.emplace_back(id, std::move(J));
  return f;
}

FactorEvaluation prior_factor(int id, const NavState& x, const NavState& prior,
                              const Eigen::Matrix<double, kStateDim, kStateDim>& covariance) {
  FactorEvaluation f;
  f.residual = local_state(prior, x);
  f.covariance = covariance;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(kStateDim, kStateDim);
  J.block<3, 3>(kIdxTheta, kIdxTheta) = right_jacobian_inv_so3(f.residual.head<3>());
  J.block<3, 3>(kIdxPos, kIdxPos) = prior.T.R.transpose() * x.T.R;
  J.block<9, 9>(kIdxVel, kIdxVel) = Eigen::Matrix<double, 9, 9>::Identity();
  f.jacobians.emplace_back(id, std::move(J));
  return f;
}

double huber_weight(double whitened_norm, double delta) {
  if (whitened_norm <= delta) return 1.0;
  return delta / whitened_norm;
}

}  // namespace lro
