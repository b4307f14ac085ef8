#include "scmpc/ellipsoid.hpp"

#include <cmath>

#include "scmpc/errors.hpp"

namespace scmpc {

Ellipsoid::Ellipsoid(const Eigen::MatrixXd& Q) : Q_(Q) {
  if (Q.rows() != Q.cols() || Q.rows() == 0) {
    throw DimensionMismatch("ellipsoid matrix must be square and non-empty");
  }
  if (!Q.allFinite()) throw CholeskyFailure("ellipsoid matrix has non-finite entries");
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + Q.cwiseAbs().maxCoeff())) {
    throw CholeskyFailure("ellipsoid matrix is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(Q);
  if (llt.info() != Eigen::Success) {
    throw CholeskyFailure("ellipsoid matrix is not positive definite");
  }
  L_ = llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q);
  eigenvalues_ = eig.eigenvalues();
  eigenvectors_ = eig.eigenvectors();
  if (eigenvalues_.minCoeff() <= 0.0) {
    throw CholeskyFailure("ellipsoid matrix is not positive definite");
  }
}

double Ellipsoid::quadratic(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return (L_.transpose() * x).squaredNorm();
}

double Ellipsoid::solve_multiplier(const Eigen::VectorXd& xt) const {
  double mu = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    double f = 0.0;
    double df = 0.0;  // derivative of f with respect to mu
    for (int k = 0; k < xt.size(); ++k) {
      const double lam = eigenvalues_(k);
      const double den = 1.0 + mu * lam;
      const double term = lam * xt(k) * xt(k) / (den * den);
      f += term;
      df += -2.0 * term * lam / den;
    }
    // psi = f^-1/2 - 1, psi' = -1/2 f^-3/2 f'
    const double psi = 1.0 / std::sqrt(f) - 1.0;
    const double dpsi = -0.5 * df / (f * std::sqrt(f));
    const double step = psi / dpsi;
    mu -= step;
    if (mu < 0.0) mu = 0.0;
    if (std::abs(step) <= 1e-15 * (1.0 + mu) || std::abs(psi) <= 1e-15) break;
  }
  return mu;
}

Eigen::VectorXd Ellipsoid::project(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim()) throw DimensionMismatch("ellipsoid projection: dimension mismatch");
  if (quadratic(x) <= 1.0) return x;
  const Eigen::VectorXd xt = eigenvectors_.transpose() * x;
  const double mu = solve_multiplier(xt);
  Eigen::VectorXd yt(xt.size());
  for (int k = 0; k < xt.size(); ++k) yt(k) = xt(k) / (1.0 + mu * eigenvalues_(k));
  return eigenvectors_ * yt;
}

double Ellipsoid::distance(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim()) throw DimensionMismatch("ellipsoid distance: dimension mismatch");
  if (quadratic(x) <= 1.0) return 0.0;
  const Eigen::VectorXd xt = eigenvectors_.transpose() * x;
  const double mu = solve_multiplier(xt);
  // x - y has eigen-coordinates mu lambda_k xt_k / (1 + mu lambda_k).
  double d2 = 0.0;
  for (int k = 0; k < xt.size(); ++k) {
    const double lam = eigenvalues_(k);
    const double r = mu * lam * xt(k) / (1.0 + mu * lam);
    d2 += r * r;
  }
  return std::sqrt(d2);
}

}  // namespace scmpc
