#pragma once

#include <random>

#include <Eigen/Dense>

#include "lro/sensor_types.hpp"

namespace lro {

/// Stacked linear system  y = X v  relating radar ego-velocity to the
/// per-point doppler measurements: row n of X is the unit bearing of point n
/// transposed, y_n = -v_r^n.
struct LsSystem {
  Eigen::Matrix<double, Eigen::Dynamic, 3> X;
  Eigen::VectorXd y;
  int size() const { return static_cast<int>(y.size()); }
};

struct RansacParams {
  double inlier_threshold = 0.15;  // m/s, tied to the sensor doppler resolution
  int max_iterations = 200;
  int min_inliers_abs = 8;
  double min_inliers_frac = 0.3;   // of usable N
  int sample_size = 3;
  double condition_limit = 1e4;    // gate on cond(X^T X)
  double covariance_floor = 1e-4;  // m^2/s^2 per diagonal, applied after the LS covariance

  int min_inliers(int n) const {
    return std::max(min_inliers_abs, static_cast<int>(min_inliers_frac * n));
  }
};

struct VelocityEstimate {
  Vec3 v = Vec3::Zero();           // m/s, frame R
  Mat3 covariance = Mat3::Zero();  // m^2/s^2
  int inlier_count = 0;
  bool degenerate = false;
  double condition_number = 0.0;
  double residual_rms = 0.0;
};

/// Drops zero-range points and stacks the rest. Throws TooFewPoints for N < 3.
LsSystem build_system(const RadarScan& scan);

/// Minimizer of ||y - X v||^2 via the normal equations.
/// Throws DegenerateGeometry when cond(X^T X) exceeds the limit.
Vec3 solve_ls(const LsSystem& sys, double condition_limit = 1e4);

/// Least-squares covariance (X^T X)^-1 * ||y - X v||^2 / (N - 3).
/// Throws InsufficientResidualDof for N <= 3. No floor applied here.
Mat3 estimate_covariance(const LsSystem& sys, const Vec3& v);

/// RANSAC over build_system rows. Throws TooFewPoints / NoConsensus; geometry
/// degeneracy of the consensus set is reported through the `degenerate` flag
/// rather than a throw so callers can skip the factor but keep diagnostics.
VelocityEstimate ransac_estimate(const RadarScan& scan, const RansacParams& params,
                                 std::mt19937_64& rng);

}  // namespace lro
