#include "scmpc/prediction.hpp"

#include "scmpc/errors.hpp"

namespace scmpc {

MatrixXd closed_loop(const MatrixXd& A, const MatrixXd& B, const MatrixXd& K_f) {
  if (A.rows() != A.cols() || B.rows() != A.rows() || K_f.rows() != B.cols() || K_f.cols() != A.cols()) {
    throw DimensionMismatch("closed_loop: incompatible A, B, K_f shapes");
  }
  return A + B * K_f;
}

PredictionOperators build_operators(const MatrixXd& A_cl, const MatrixXd& B, const MatrixXd& B_gamma, int N) {
  if (N < 1) throw DomainError("horizon must be at least 1");
  const Eigen::Index n = A_cl.rows();
  if (A_cl.cols() != n || B.rows() != n || B_gamma.rows() != n) {
    throw DimensionMismatch("build_operators: incompatible shapes");
  }
  const Eigen::Index m = B.cols();
  const Eigen::Index mg = B_gamma.cols();

  PredictionOperators ops;
  ops.powers.reserve(N + 1);
  ops.powers.push_back(MatrixXd::Identity(n, n));
  for (int j = 1; j <= N; ++j) ops.powers.push_back(A_cl * ops.powers.back());

  ops.Phi.reserve(N);
  ops.Upsilon.reserve(N);
  MatrixXd phi = MatrixXd::Zero(n, N * m);
  MatrixXd ups = MatrixXd::Zero(n, N * mg);
  for (int j = 0; j < N; ++j) {
    if (j > 0) {
      // Only the first j blocks are nonzero.
      phi.leftCols(j * m) = A_cl * phi.leftCols(j * m);
      ups.leftCols(j * mg) = A_cl * ups.leftCols(j * mg);
    }
    phi.middleCols(j * m, m) = B;
    ups.middleCols(j * mg, mg) = B_gamma;
    ops.Phi.push_back(phi);
    ops.Upsilon.push_back(ups);
  }
  return ops;
}

MatrixXd predict(const VectorXd& x_t, const VectorXd& V, const PredictionOperators& ops, const VectorXd& gamma) {
  const int N = ops.horizon();
  if (N == 0) throw DomainError("empty prediction operators");
  const Eigen::Index n = ops.powers.front().rows();
  if (x_t.size() != n || V.size() != ops.Phi.front().cols() || gamma.size() != ops.Upsilon.front().cols()) {
    throw DimensionMismatch("predict: incompatible x_t, V or gamma size");
  }
  MatrixXd traj(n, N);
  for (int j = 1; j <= N; ++j) {
    traj.col(j - 1) = ops.powers[j] * x_t + ops.Phi[j - 1] * V + ops.Upsilon[j - 1] * gamma;
  }
  return traj;
}

}  // namespace scmpc
