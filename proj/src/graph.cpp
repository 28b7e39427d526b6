#include "lro/graph.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace lro {

namespace {

Eigen::MatrixXd local_jacobian(const NavState& lin, const NavState& cur) {
  const Eigen::Matrix<double, kStateDim, 1> d = local_state(lin, cur);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(kStateDim, kStateDim);
  J.block<3, 3>(kIdxTheta, kIdxTheta) = right_jacobian_inv_so3(d.head<3>());
  J.block<3, 3>(kIdxPos, kIdxPos) = lin.T.R.transpose() * cur.T.R;
  J.block<9, 9>(kIdxVel, kIdxVel) = Eigen::Matrix<double, 9, 9>::Identity();
  return J;
}

// whitened residual/Jacobians via the Cholesky factor of the covariance
void whiten(FactorEvaluation& f) {
  if (f.covariance.size() == 0) return;  // already whitened
  Eigen::LLT<Eigen::MatrixXd> llt(f.covariance);
  f.residual = llt.matrixL().solve(f.residual);
  for (auto& [id, J] : f.jacobians) J = llt.matrixL().solve(J);
  f.covariance.resize(0, 0);
}

double huber_rho(double n, double delta) {
  if (n <= delta) return 0.5 * n * n;
  return delta * (n - 0.5 * delta);
}

}  // namespace

FactorEvaluation MarginalPriorTerm::evaluate(const std::map<int, GraphNode>& nodes) const {
  const int k = static_cast<int>(ids_.size());
  Eigen::VectorXd d(kStateDim * k);
  FactorEvaluation f;
  for (int i = 0; i < k; ++i) {
    d.segment<kStateDim>(kStateDim * i) = local_state(lin_states_[i], nodes.at(ids_[i]).state);
  }
  f.residual = r0_ + A_ * d;
  for (int i = 0; i < k; ++i) {
    Eigen::MatrixXd J = A_.middleCols(kStateDim * i, kStateDim) *
                        local_jacobian(lin_states_[i], nodes.at(ids_[i]).state);
    f.jacobians.emplace_back(ids_[i], std::move(J));
  }
  // covariance left empty: residual is already whitened
  return f;
}

int FactorGraphWindow::add_node(double t, const NavState& state) {
  const int id = next_id_++;
  nodes_[id] = GraphNode{id, t, state};
  return id;
}

bool FactorGraphWindow::has_marginal_prior() const {
  return std::any_of(factors_.begin(), factors_.end(), [](const auto& f) {
    return dynamic_cast<const MarginalPriorTerm*>(f.get()) != nullptr;
  });
}

void FactorGraphWindow::accumulate(const FactorEvaluation& eval, const OptimizerConfig& cfg,
                                   const std::map<int, int>& offset, Eigen::MatrixXd& H,
                                   Eigen::VectorXd& b) const {
  FactorEvaluation f = eval;
  whiten(f);
  double w = 1.0;
  if (f.robust) w = huber_weight(f.residual.norm(), cfg.huber_delta);
  for (size_t a = 0; a < f.jacobians.size(); ++a) {
    const auto& [id_a, J_a] = f.jacobians[a];
    const int oa = offset.at(id_a);
    b.segment<kStateDim>(oa) += w * J_a.transpose() * f.residual;
    for (size_t c = 0; c < f.jacobians.size(); ++c) {
      const auto& [id_c, J_c] = f.jacobians[c];
      H.block<kStateDim, kStateDim>(oa, offset.at(id_c)) += w * J_a.transpose() * J_c;
    }
  }
}

double FactorGraphWindow::robust_cost(const OptimizerConfig& cfg) const {
  double cost = 0.0;
  for (const auto& fac : factors_) {
    FactorEvaluation f = fac->evaluate(nodes_);
    whiten(f);
    const double n = f.residual.norm();
    cost += f.robust ? huber_rho(n, cfg.huber_delta) : 0.5 * n * n;
  }
  return cost;
}

OptimizeResult FactorGraphWindow::optimize(const OptimizerConfig& cfg) {
  OptimizeResult res;
  if (nodes_.empty()) return res;

  std::map<int, int> offset;
  int dim = 0;
  for (const auto& [id, node] : nodes_) {
    offset[id] = dim;
    dim += kStateDim;
  }

  double lambda = cfg.lambda_init;
  double cost = robust_cost(cfg);
  res.initial_cost = cost;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
    for (const auto& fac : factors_) accumulate(fac->evaluate(nodes_), cfg, offset, H, b);

    const std::map<int, GraphNode> backup = nodes_;
    bool accepted = false;
    double last_step_norm = 0.0;
    for (int retry = 0; retry <= cfg.max_retries; ++retry) {
      Eigen::MatrixXd Hd = H;
      for (int d = 0; d < dim; ++d) Hd(d, d) += lambda * std::max(H(d, d), 1e-12);
      const Eigen::VectorXd step = Hd.ldlt().solve(-b);
      last_step_norm = step.norm();

      nodes_ = backup;
      for (auto& [id, node] : nodes_) {
        node.state = retract_state(node.state,
                                   step.segment<kStateDim>(offset.at(id)));
      }
      const double new_cost = robust_cost(cfg);
      if (new_cost <= cost + 1e-12 * (1.0 + cost)) {
        accepted = true;
        cost = std::min(new_cost, cost);
        lambda = std::max(lambda * cfg.lambda_down, 1e-12);
        res.iterations = it + 1;
        if (step.norm() < cfg.step_tolerance) {
          res.converged = true;
        }
        break;
      }
      lambda *= cfg.lambda_up;
    }
    if (!accepted) {
      nodes_ = backup;
      if (last_step_norm < cfg.step_tolerance) {
        res.converged = true;
      } else {
        res.diverged = true;
      }
      break;
    }
    if (res.converged) break;
  }
  res.final_cost = cost;
  return res;
}

void FactorGraphWindow::marginalize_before(double t_min) {
  std::vector<int> marg_ids;
  for (const auto& [id, node] : nodes_) {
    if (node.t < t_min) marg_ids.push_back(id);
  }
  if (marg_ids.empty()) return;

  auto is_marg = [&](int id) {
    return std::binary_search(marg_ids.begin(), marg_ids.end(), id);
  };

  std::vector<std::shared_ptr<Factor>> affected, kept;
  std::vector<int> boundary_ids;
  for (const auto& fac : factors_) {
    const auto& ids = fac->involved();
    const bool touches = std::any_of(ids.begin(), ids.end(), is_marg);
    if (!touches) {
      kept.push_back(fac);
      continue;
    }
    affected.push_back(fac);
    for (int id : ids) {
      if (!is_marg(id)) boundary_ids.push_back(id);
    }
  }
  std::sort(boundary_ids.begin(), boundary_ids.end());
  boundary_ids.erase(std::unique(boundary_ids.begin(), boundary_ids.end()), boundary_ids.end());

  // variable order: marginalized block first, boundary block second
  std::map<int, int> offset;
  int dim = 0;
  for (int id : marg_ids) {
    offset[id] = dim;
    dim += kStateDim;
  }
  const int m = dim;
  for (int id : boundary_ids) {
    offset[id] = dim;
    dim += kStateDim;
  }
  const int r = dim - m;

  OptimizerConfig cfg;  // huber delta only; defaults are fine here
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
  for (const auto& fac : affected) accumulate(fac->evaluate(nodes_), cfg, offset, H, b);

  Eigen::MatrixXd H_new;
  Eigen::VectorXd b_new;
  if (r > 0) {
    const Eigen::MatrixXd Hmm = H.topLeftCorner(m, m);
    const Eigen::MatrixXd Hbm = H.bottomLeftCorner(r, m);
    // small ridge keeps the inverse defined for rank-deficient blocks
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Hmm + 1e-12 * Eigen::MatrixXd::Identity(m, m));
    const Eigen::MatrixXd Hmm_inv_Hmb = ldlt.solve(Hbm.transpose());
    const Eigen::VectorXd Hmm_inv_bm = ldlt.solve(b.head(m));
    H_new = H.bottomRightCorner(r, r) - Hbm * Hmm_inv_Hmb;
    b_new = b.tail(r) - Hbm * Hmm_inv_bm;
  }

  for (int id : marg_ids) nodes_.erase(id);
  factors_ = std::move(kept);

  if (r == 0) return;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (H_new + H_new.transpose()));
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double thresh = std::max(ev.maxCoeff(), 0.0) * 1e-12 + 1e-300;
  std::vector<int> keep_rows;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) > thresh) keep_rows.push_back(i);
  }
  const int rank = static_cast<int>(keep_rows.size());
  if (rank == 0) return;

  Eigen::MatrixXd A(rank, r);
  Eigen::VectorXd r0(rank);
  for (int i = 0; i < rank; ++i) {
    const double s = std::sqrt(ev(keep_rows[i]));
    A.row(i) = s * eig.eigenvectors().col(keep_rows[i]).transpose();
    r0(i) = eig.eigenvectors().col(keep_rows[i]).dot(b_new) / s;
  }

  std::vector<NavState> lin;
  lin.reserve(boundary_ids.size());
  for (int id : boundary_ids) lin.push_back(nodes_.at(id).state);
  factors_.push_back(
      std::make_shared<MarginalPriorTerm>(boundary_ids, std::move(lin), std::move(A), std::move(r0)));
}

Eigen::Matrix<double, kStateDim, kStateDim> FactorGraphWindow::marginal_information(
    int target, const OptimizerConfig& cfg, bool include_priors) const {
  std::map<int, int> offset;
  int dim = 0;
  // target block last
  for (const auto& [id, node] : nodes_) {
    if (id == target) continue;
    offset[id] = dim;
    dim += kStateDim;
  }
  const int m = dim;
  offset[target] = dim;
  dim += kStateDim;

  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
  for (const auto& fac : factors_) {
    if (!include_priors && (dynamic_cast<const MarginalPriorTerm*>(fac.get()) != nullptr ||
                            dynamic_cast<const PriorFactorTerm*>(fac.get()) != nullptr)) {
      continue;
    }
    accumulate(fac->evaluate(nodes_), cfg, offset, H, b);
  }
  if (m == 0) return H;

  const Eigen::MatrixXd Hmm = H.topLeftCorner(m, m);
  const Eigen::MatrixXd Htm = H.bottomLeftCorner(kStateDim, m);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(Hmm + 1e-10 * Eigen::MatrixXd::Identity(m, m));
  return H.bottomRightCorner(kStateDim, kStateDim) - Htm * ldlt.solve(Htm.transpose());
}

}  // namespace lro
