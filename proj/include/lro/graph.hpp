#pragma once

#include <map>
#include <memory>
#include <vector>

#include "lro/factors.hpp"

namespace lro {

struct GraphNode {
  int id = 0;
  double t = 0.0;
  NavState state;
};

/// A cost term over one or more window nodes. Relinearized every evaluation.
class Factor {
 public:
  virtual ~Factor() = default;
  virtual FactorEvaluation evaluate(const std::map<int, GraphNode>& nodes) const = 0;
  const std::vector<int>& involved() const { return ids_; }

 protected:
  std::vector<int> ids_;
};

class PriorFactorTerm : public Factor {
 public:
  PriorFactorTerm(int id, NavState prior, Eigen::Matrix<double, kStateDim, kStateDim> cov)
      : prior_(std::move(prior)), cov_(std::move(cov)) {
    ids_ = {id};
  }
  FactorEvaluation evaluate(const std::map<int, GraphNode>& nodes) const override {
    return prior_factor(ids_[0], nodes.at(ids_[0]).state, prior_, cov_);
  }

 private:
  NavState prior_;
  Eigen::Matrix<double, kStateDim, kStateDim> cov_;
};

class ImuFactorTerm : public Factor {
 public:
  ImuFactorTerm(int id_i, int id_j, ImuPreintegration preint, Vec3 gravity_w)
      : preint_(std::move(preint)), gravity_(std::move(gravity_w)) {
    ids_ = {id_i, id_j};
  }
  FactorEvaluation evaluate(const std::map<int, GraphNode>& nodes) const override {
    return imu_factor(ids_[0], ids_[1], nodes.at(ids_[0]).state, nodes.at(ids_[1]).state,
                      preint_, gravity_);
  }
  const ImuPreintegration& preint() const { return preint_; }

 private:
  ImuPreintegration preint_;
  Vec3 gravity_;
};

class BiasWalkTerm : public Factor {
 public:
  BiasWalkTerm(int id_i, int id_j, double dt, ImuNoise noise) : dt_(dt), noise_(noise) {
    ids_ = {id_i, id_j};
  }
  FactorEvaluation evaluate(const std::map<int, GraphNode>& nodes) const override {
    return bias_walk_factor(ids_[0], ids_[1], nodes.at(ids_[0]).state, nodes.at(ids_[1]).state,
                            dt_, noise_);
  }

 private:
  double dt_;
  ImuNoise noise_;
};

class PlaneFactorTerm : public Factor {
 public:
  PlaneFactorTerm(int id, PlaneCorrespondence corr, double sigma)
      : corr_(std::move(corr)), sigma_(sigma) {
    ids_ = {id};
  }
  FactorEvaluation evaluate(const std::map<int, GraphNode>& nodes) const override {
    return point_to_plane_factor(ids_[0], nodes.at(ids_[0]).state, corr_, sigma_);
  }

 private:
  PlaneCorrespondence corr_;
  double sigma_;
};

class LineFactorTerm : public Factor {
 public:
  LineFactorTerm(int id, LineCorrespondence corr, double sigma)
      : corr_(std::move(corr)), sigma_(sigma) {
    ids_ = {id};
  }
  FactorEvaluation evaluate(const std::map<int, GraphNode>& nodes) const override {
    return point_to_line_factor(ids_[0], nodes.at(ids_[0]).state, corr_, sigma_);
  }

 private:
  LineCorrespondence corr_;
  double sigma_;
};

class RadarVelocityTerm : public Factor {
 public:
  RadarVelocityTerm(int id, Vec3 omega_meas, Vec3 v_tilde, Mat3 cov, Extrinsics ext)
      : omega_(std::move(omega_meas)),
        v_tilde_(std::move(v_tilde)),
        cov_(std::move(cov)),
        ext_(std::move(ext)) {
    ids_ = {id};
  }
  FactorEvaluation evaluate(const std::map<int, GraphNode>& nodes) const override {
    return radar_velocity_factor(ids_[0], nodes.at(ids_[0]).state, omega_, v_tilde_, cov_, ext_);
  }

 private:
  Vec3 omega_;
  Vec3 v_tilde_;
  Mat3 cov_;
  Extrinsics ext_;
};

/// Dense prior produced by marginalization: residual r0 + A * local(lin, cur)
/// stacked over the boundary nodes. Already whitened (unit covariance).
class MarginalPriorTerm : public Factor {
 public:
  MarginalPriorTerm(std::vector<int> ids, std::vector<NavState> lin_states,
                    Eigen::MatrixXd sqrt_info, Eigen::VectorXd r0)
      : lin_states_(std::move(lin_states)), A_(std::move(sqrt_info)), r0_(std::move(r0)) {
    ids_ = std::move(ids);
  }
  FactorEvaluation evaluate(const std::map<int, GraphNode>& nodes) const override;

 private:
  std::vector<NavState> lin_states_;
  Eigen::MatrixXd A_;  // r x 15k
  Eigen::VectorXd r0_;
};

struct OptimizerConfig {
  int max_iterations = 10;
  double step_tolerance = 1e-6;
  double lambda_init = 1e-6;
  double lambda_up = 10.0;
  double lambda_down = 0.5;
  int max_retries = 8;
  double huber_delta = 1.345;
};

struct OptimizeResult {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;
  bool diverged = false;
};

/// Windowed nonlinear least squares over NavState nodes with damped
/// Gauss-Newton steps and Schur-complement marginalization on slide.
class FactorGraphWindow {
 public:
  int add_node(double t, const NavState& state);
  void add_factor(std::shared_ptr<Factor> f) { factors_.push_back(std::move(f)); }

  OptimizeResult optimize(const OptimizerConfig& cfg);

  /// Marginalizes every node with t < t_min into a dense prior on the
  /// boundary nodes of the factors it touches.
  void marginalize_before(double t_min);

  double robust_cost(const OptimizerConfig& cfg) const;

  /// Marginal information of one node (Schur complement of all other window
  /// nodes), optionally excluding the marginal/initial prior terms.
  Eigen::Matrix<double, kStateDim, kStateDim> marginal_information(
      int id, const OptimizerConfig& cfg, bool include_priors = true) const;

  const std::map<int, GraphNode>& nodes() const { return nodes_; }
  std::map<int, GraphNode>& mutable_nodes() { return nodes_; }
  const std::vector<std::shared_ptr<Factor>>& factors() const { return factors_; }
  bool empty() const { return nodes_.empty(); }
  const GraphNode& newest() const { return nodes_.rbegin()->second; }
  bool has_marginal_prior() const;

 private:
  void accumulate(const FactorEvaluation& eval, const OptimizerConfig& cfg,
                  const std::map<int, int>& offset, Eigen::MatrixXd& H,
                  Eigen::VectorXd& b) const;

  std::map<int, GraphNode> nodes_;
  std::vector<std::shared_ptr<Factor>> factors_;
  int next_id_ = 0;
};

}  // namespace lro
