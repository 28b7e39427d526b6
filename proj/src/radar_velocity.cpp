#include "lro/radar_velocity.hpp"

#include <algorithm>

#include <Eigen/SVD>

namespace lro {

namespace {

double condition_of_normal_matrix(const Eigen::Matrix<double, Eigen::Dynamic, 3>& X) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
  const auto& s = svd.singularValues();
  if (s(2) <= 0.0) return std::numeric_limits<double>::infinity();
  const double c = s(0) / s(2);
  return c * c;  // cond(X^T X) = cond(X)^2
}

std::vector<int> inliers_for(const LsSystem& sys, const Vec3& v, double threshold) {
  std::vector<int> idx;
  for (int n = 0; n < sys.size(); ++n) {
    if (std::abs(sys.y(n) - sys.X.row(n).dot(v)) <= threshold) idx.push_back(n);
  }
  return idx;
}

LsSystem subset(const LsSystem& sys, const std::vector<int>& idx) {
  LsSystem s;
  s.X.resize(static_cast<int>(idx.size()), 3);
  s.y.resize(static_cast<int>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) {
    s.X.row(static_cast<int>(i)) = sys.X.row(idx[i]);
    s.y(static_cast<int>(i)) = sys.y(idx[i]);
  }
  return s;
}

}  // namespace

LsSystem build_system(const RadarScan& scan) {
  std::vector<const RadarPoint*> usable;
  usable.reserve(scan.points.size());
  for (const RadarPoint& p : scan.points) {
    if (p.position.norm() > 1e-6) usable.push_back(&p);
  }
  if (usable.size() < 3) throw TooFewPoints(static_cast<int>(usable.size()));
  LsSystem sys;
  sys.X.resize(static_cast<int>(usable.size()), 3);
  sys.y.resize(static_cast<int>(usable.size()));
  for (size_t n = 0; n < usable.size(); ++n) {
    sys.X.row(static_cast<int>(n)) = bearing(*usable[n]).transpose();
    sys.y(static_cast<int>(n)) = -usable[n]->radial_speed;
  }
  return sys;
}

Vec3 solve_ls(const LsSystem& sys, double condition_limit) {
  const double cond = condition_of_normal_matrix(sys.X);
  if (!(cond < condition_limit)) throw DegenerateGeometry(cond);
  const Mat3 XtX = sys.X.transpose() * sys.X;
  return XtX.ldlt().solve(sys.X.transpose() * sys.y);
}

Mat3 estimate_covariance(const LsSystem& sys, const Vec3& v) {
  const int n = sys.size();
  if (n <= 3) throw InsufficientResidualDof();
  const Mat3 XtX = sys.X.transpose() * sys.X;
  const double rss = (sys.y - sys.X * v).squaredNorm();
  Mat3 cov = XtX.inverse() * (rss / static_cast<double>(n - 3));
  return 0.5 * (cov + cov.transpose());
}

VelocityEstimate ransac_estimate(const RadarScan& scan, const RansacParams& params,
                                 std::mt19937_64& rng) {
  const LsSystem sys = build_system(scan);
  const int n = sys.size();
  std::uniform_int_distribution<int> pick(0, n - 1);

  std::vector<int> best;
  for (int it = 0; it < params.max_iterations; ++it) {
    int i = pick(rng), j = pick(rng), k = pick(rng);
    if (i == j || i == k || j == k) continue;
    Mat3 A;
    A.row(0) = sys.X.row(i);
    A.row(1) = sys.X.row(j);
    A.row(2) = sys.X.row(k);
    if (std::abs(A.determinant()) < 1e-6) continue;
    const Vec3 v = A.inverse() * Vec3(sys.y(i), sys.y(j), sys.y(k));
    std::vector<int> idx = inliers_for(sys, v, params.inlier_threshold);
    if (idx.size() > best.size()) {
      best = std::move(idx);
      if (static_cast<int>(best.size()) == n) break;
    }
  }
  if (static_cast<int>(best.size()) < params.min_inliers(n)) throw NoConsensus();

  VelocityEstimate est;
  // refine on the consensus set, re-gating once against the refined model
  for (int round = 0; round < 2; ++round) {
    const LsSystem fit = subset(sys, best);
    est.condition_number = condition_of_normal_matrix(fit.X);
    try {
      est.v = solve_ls(fit, params.condition_limit);
    } catch (const DegenerateGeometry&) {
      est.degenerate = true;
      est.inlier_count = fit.size();
      return est;
    }
    std::vector<int> re = inliers_for(sys, est.v, params.inlier_threshold);
    if (re == best || static_cast<int>(re.size()) < params.min_inliers(n)) break;
    best = std::move(re);
  }

  const LsSystem in = subset(sys, best);
  est.inlier_count = in.size();
  est.residual_rms = std::sqrt((in.y - in.X * est.v).squaredNorm() / in.size());
  est.covariance = estimate_covariance(in, est.v);
  for (int d = 0; d < 3; ++d) {
    est.covariance(d, d) = std::max(est.covariance(d, d), params.covariance_floor);
  }
  return est;
}

}  // namespace lro
