#include "lro/geometry.hpp"

#include <cmath>

namespace lro {

namespace {
constexpr double kSmallAngle = 1e-7;
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

Mat3 exp_so3(const Vec3& theta) {
  const double angle2 = theta.squaredNorm();
  const Mat3 W = skew(theta);
  if (angle2 < kSmallAngle * kSmallAngle) {
    // 4th-order Taylor of Rodrigues' coefficients
    return Mat3::Identity() + (1.0 - angle2 / 6.0) * W +
           (0.5 - angle2 / 24.0) * W * W;
  }
  const double angle = std::sqrt(angle2);
  return Mat3::Identity() + std::sin(angle) / angle * W +
         (1.0 - std::cos(angle)) / angle2 * W * W;
}

Vec3 log_so3(const Mat3& R) {
  const double tr = R.trace();
  const Vec3 w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  if (tr >= 3.0 - 1e-10) {
    // angle near 0: log(R) ~ 0.5*(1 + angle^2/6)*vee(R - R^T)
    const double angle2 = 0.25 * w.squaredNorm();
    return 0.5 * (1.0 + angle2 / 6.0) * w;
  }
  if (tr <= -1.0 + 1e-7) {
    // angle near pi: recover the axis from the dominant diagonal entry
    const double cos_angle = std::max(-1.0, 0.5 * (tr - 1.0));
    const double angle = std::acos(cos_angle);
    const double one_minus_cos = 1.0 - cos_angle;
    int k = 0;
    if (R(1, 1) > R(0, 0)) k = 1;
    if (R(2, 2) > R(k, k)) k = 2;
    Vec3 axis = Vec3::Zero();
    axis[k] = std::sqrt(std::max(0.0, (R(k, k) - cos_angle) / one_minus_cos));
    for (int i = 0; i < 3; ++i) {
      if (i != k) axis[i] = (R(k, i) + R(i, k)) / (2.0 * axis[k] * one_minus_cos);
    }
    // the skew part fixes the sign; it may vanish exactly at pi
    if (w.norm() > 1e-12 && axis.dot(w) < 0.0) axis = -axis;
    axis.normalize();
    return angle * axis;
  }
  const double angle = std::acos(0.5 * (tr - 1.0));
  return angle / (2.0 * std::sin(angle)) * w;
}

Mat3 right_jacobian_so3(const Vec3& theta) {
  const double angle2 = theta.squaredNorm();
  const Mat3 W = skew(theta);
  if (angle2 < kSmallAngle * kSmallAngle) {
    return Mat3::Identity() - 0.5 * W + (1.0 / 6.0) * W * W;
  }
  const double angle = std::sqrt(angle2);
  return Mat3::Identity() - (1.0 - std::cos(angle)) / angle2 * W +
         (angle - std::sin(angle)) / (angle2 * angle) * W * W;
}

Mat3 right_jacobian_inv_so3(const Vec3& theta) {
  const double angle2 = theta.squaredNorm();
  const Mat3 W = skew(theta);
  if (angle2 < kSmallAngle * kSmallAngle) {
    return Mat3::Identity() + 0.5 * W + (1.0 / 12.0) * W * W;
  }
  const double angle = std::sqrt(angle2);
  const double c = 1.0 / angle2 - (1.0 + std::cos(angle)) / (2.0 * angle * std::sin(angle));
  return Mat3::Identity() + 0.5 * W + c * W * W;
}

Pose retract(const Pose& T, const Vec3& dtheta, const Vec3& dp) {
  return {T.R * exp_so3(dtheta), T.p + T.R * dp};
}

Vec6 local(const Pose& a, const Pose& b) {
  Vec6 out;
  out.head<3>() = log_so3(a.R.transpose() * b.R);
  out.tail<3>() = a.R.transpose() * (b.p - a.p);
  return out;
}

Pose interpolate_pose(const Pose& a, const Pose& b, double alpha) {
  Pose out;
  out.R = a.R * exp_so3(alpha * log_so3(a.R.transpose() * b.R));
  out.p = (1.0 - alpha) * a.p + alpha * b.p;
  return out;
}

}  // namespace lro
