#pragma once

#include <Eigen/Dense>

namespace scmpc {

/// The set {x : x' Q x <= 1} for a symmetric positive definite Q.
///
/// Holds the lower Cholesky factor (Q = L L') used by the cone lowering, so
/// that x' Q x = ||L' x||^2, and the eigen-decomposition used by the
/// projection.
class Ellipsoid {
 public:
  /// Throws CholeskyFailure unless Q is symmetric positive definite.
  explicit Ellipsoid(const Eigen::MatrixXd& Q);

  int dim() const { return static_cast<int>(Q_.rows()); }
  const Eigen::MatrixXd& Q() const { return Q_; }
  const Eigen::MatrixXd& L() const { return L_; }

  /// x' Q x.
  double quadratic(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol = 0.0) const {
    return quadratic(x) <= 1.0 + tol;
  }

  /// Euclidean distance from x to the set, min ||x - y|| over y' Q y <= 1.
  ///
  /// Outside the set the projection is y = (I + mu Q)^-1 x for the unique
  /// mu > 0 with y' Q y = 1. In the eigenbasis of Q the scalar function
  ///   psi(mu) = 1 / sqrt(sum_k lambda_k xt_k^2 / (1 + mu lambda_k)^2) - 1
  /// is increasing and concave with psi(0) < 0, so Newton started at mu = 0
  /// approaches the root monotonically from the left (exact in one step when
  /// Q is a multiple of the identity).
  double distance(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Projection of x onto the set.
  Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  double solve_multiplier(const Eigen::VectorXd& xt) const;

  Eigen::MatrixXd Q_;
  Eigen::MatrixXd L_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
};

}  // namespace scmpc
