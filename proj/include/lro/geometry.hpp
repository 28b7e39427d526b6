#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace lro {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;

/// Skew-symmetric matrix such that skew(v) * u == v.cross(u).
Mat3 skew(const Vec3& v);

/// SO(3) exponential map, Taylor fallback near zero angle.
Mat3 exp_so3(const Vec3& theta);

/// SO(3) logarithm, valid for angles in [0, pi]; trace-robust branch near pi.
Vec3 log_so3(const Mat3& R);

/// Right Jacobian of SO(3) and its inverse.
Mat3 right_jacobian_so3(const Vec3& theta);
Mat3 right_jacobian_inv_so3(const Vec3& theta);

/// Rigid transform W <- body. Composition and point action follow the
/// homogeneous-matrix convention.
struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 p = Vec3::Zero();

  static Pose identity() { return {}; }

  Pose inverse() const { return {R.transpose(), -(R.transpose() * p)}; }

  Pose operator*(const Pose& o) const { return {R * o.R, R * o.p + p}; }

  Vec3 operator*(const Vec3& x) const { return R * x + p; }
};

/// Right (body-frame) perturbation: R <- R*Exp(dtheta), p <- p + R*dp.
/// Every analytical Jacobian in the system is stated under this convention.
Pose retract(const Pose& T, const Vec3& dtheta, const Vec3& dp);

/// Local coordinates of b around a, inverse of retract: retract(a, local(a,b)) == b.
/// Returned as (dtheta, dp).
Vec6 local(const Pose& a, const Pose& b);

/// Geodesic-in-rotation, linear-in-translation interpolation (constant
/// linear and angular velocity model), alpha in [0, 1].
Pose interpolate_pose(const Pose& a, const Pose& b, double alpha);

}  // namespace lro
