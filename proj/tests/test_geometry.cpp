#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "lro/geometry.hpp"

using namespace lro;

namespace {

std::mt19937_64 rng(42);

Vec3 random_vec(double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return Vec3(n(rng), n(rng), n(rng));
}

Pose random_pose() {
  Vec3 theta = random_vec();
  if (theta.norm() > 3.0) theta *= 3.0 / theta.norm();
  return {exp_so3(theta), random_vec(2.0)};
}

}  // namespace

TEST_CASE("skew matches definition and cross product") {
  Mat3 expected;
  expected << 0, -3, 2, 3, 0, -1, -2, 1, 0;
  CHECK((skew(Vec3(1, 2, 3)) - expected).norm() == doctest::Approx(0.0));
  CHECK(skew(Vec3::Zero()).norm() == 0.0);

  for (int i = 0; i < 200; ++i) {
    const Vec3 v = random_vec(), u = random_vec();
    CHECK((skew(v) * u - v.cross(u)).norm() < 1e-12);
    CHECK((skew(v).transpose() + skew(v)).norm() == 0.0);
  }
}

TEST_CASE("exp_so3 basics") {
  CHECK((exp_so3(Vec3::Zero()) - Mat3::Identity()).norm() == 0.0);
  const Mat3 R = exp_so3(Vec3(0, 0, M_PI / 2));
  CHECK((R * Vec3(1, 0, 0) - Vec3(0, 1, 0)).norm() < 1e-12);
}

TEST_CASE("log(exp(theta)) round trip below pi") {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    Vec3 axis = random_vec();
    while (axis.norm() < 1e-3) axis = random_vec();
    axis.normalize();
    // cover tiny, moderate and near-pi angles
    double angle;
    const double pick = u(rng);
    if (pick < 0.2) {
      angle = u(rng) * 1e-6;
    } else if (pick < 0.8) {
      angle = u(rng) * 3.0;
    } else {
      angle = M_PI - u(rng) * 1e-5;
    }
    const Vec3 theta = angle * axis;
    // the log is ill-conditioned near pi; allow a looser bound there
    const double tol = angle > 3.0 ? 1e-7 : 1e-9;
    CHECK((log_so3(exp_so3(theta)) - theta).norm() < tol);
  }
}

TEST_CASE("orthonormality preserved over many compositions") {
  Mat3 R = Mat3::Identity();
  for (int i = 0; i < 10000; ++i) R = R * exp_so3(random_vec(0.5));
  CHECK((R * R.transpose() - Mat3::Identity()).norm() < 1e-9);
  CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("pose composition and inverse") {
  for (int i = 0; i < 500; ++i) {
    const Pose a = random_pose(), b = random_pose();
    const Vec3 x = random_vec(3.0);
    CHECK(((a * b) * x - a * (b * x)).norm() < 1e-9);
    const Pose inv_ab = (a * b).inverse();
    const Pose ba_inv = b.inverse() * a.inverse();
    CHECK((inv_ab.R - ba_inv.R).norm() < 1e-9);
    CHECK((inv_ab.p - ba_inv.p).norm() < 1e-9);
  }
}

TEST_CASE("retract and local are inverse") {
  for (int i = 0; i < 200; ++i) {
    const Pose a = random_pose();
    const Vec3 dtheta = random_vec(0.5), dp = random_vec();
    const Pose b = retract(a, dtheta, dp);
    const Vec6 d = local(a, b);
    CHECK((d.head<3>() - dtheta).norm() < 1e-9);
    CHECK((d.tail<3>() - dp).norm() < 1e-9);
  }
}

TEST_CASE("interpolate_pose endpoints and midpoint") {
  const Pose a = Pose::identity();
  Pose b{exp_so3(Vec3(0, 0, M_PI / 2)), Vec3(1, 0, 0)};

  Pose m = interpolate_pose(a, b, 0.5);
  CHECK((m.R - exp_so3(Vec3(0, 0, M_PI / 4))).norm() < 1e-12);
  CHECK((m.p - Vec3(0.5, 0, 0)).norm() < 1e-12);

  for (int i = 0; i < 100; ++i) {
    const Pose x = random_pose(), y = random_pose();
    const Pose at0 = interpolate_pose(x, y, 0.0);
    const Pose at1 = interpolate_pose(x, y, 1.0);
    CHECK((at0.R - x.R).norm() < 1e-12);
    CHECK((at0.p - x.p).norm() < 1e-12);
    CHECK((at1.R - y.R).norm() < 1e-12);
    CHECK((at1.p - y.p).norm() < 1e-12);
  }
}

TEST_CASE("interpolation equals constant-twist integration") {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Pose a = random_pose(), b = random_pose();
    const double alpha = u(rng);
    // constant body angular rate and constant world linear velocity over a
    // unit interval between a and b
    const Vec3 omega = log_so3(a.R.transpose() * b.R);
    const Vec3 v = b.p - a.p;
    const int steps = 20000;
    const double h = alpha / steps;
    Mat3 R = a.R;
    Vec3 p = a.p;
    for (int s = 0; s < steps; ++s) {
      R = R * exp_so3(omega * h);
      p += v * h;
    }
    const Pose got = interpolate_pose(a, b, alpha);
    CHECK((got.R - R).norm() < 1e-9);
    CHECK((got.p - p).norm() < 1e-9);
  }
}

TEST_CASE("right-perturbation Jacobian of R*i + p is [-R*i^, R]") {
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const Pose T = random_pose();
    const Vec3 i = random_vec(2.0);
    Eigen::Matrix<double, 3, 6> expected;
    expected.leftCols<3>() = -T.R * skew(i);
    expected.rightCols<3>() = T.R;

    Eigen::Matrix<double, 3, 6> fd;
    for (int k = 0; k < 6; ++k) {
      Vec6 d = Vec6::Zero();
      d(k) = h;
      const Pose Tp = retract(T, d.head<3>(), d.tail<3>());
      d(k) = -h;
      const Pose Tm = retract(T, d.head<3>(), d.tail<3>());
      fd.col(k) = ((Tp * i) - (Tm * i)) / (2.0 * h);
    }
    CHECK((fd - expected).norm() / std::max(1.0, expected.norm()) < 1e-5);
  }
}
