#pragma once

#include <vector>

#include <Eigen/Dense>

namespace scmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// A_cl = A + B K_f. Throws DimensionMismatch.
MatrixXd closed_loop(const MatrixXd& A, const MatrixXd& B, const MatrixXd& K_f);

/// Affine prediction maps of the closed-loop model
///   x_j = A_cl^j x_t + Phi_j V + Upsilon_j gamma,   j = 1..N,
/// where V stacks the corrections v_0..v_{N-1} and gamma stacks
/// gamma_0..gamma_{N-1}. Phi_j and Upsilon_j have zero blocks from block j on.
struct PredictionOperators {
  std::vector<MatrixXd> powers;   // A_cl^0 .. A_cl^N
  std::vector<MatrixXd> Phi;      // Phi[j-1] = Phi_j, n x N*m
  std::vector<MatrixXd> Upsilon;  // Upsilon[j-1] = Upsilon_j, n x N*m_gamma

  int horizon() const { return static_cast<int>(Phi.size()); }
};

/// Builds the operators by the recursion
///   Phi_1 = [B 0 .. 0],  Phi_{j+1} = A_cl Phi_j + [0 .. B .. 0] (B in block j),
/// and the same for Upsilon with B_gamma. Requires N >= 1.
PredictionOperators build_operators(const MatrixXd& A_cl, const MatrixXd& B, const MatrixXd& B_gamma, int N);

/// Predicted states x_1..x_N as the columns of an n x N matrix.
MatrixXd predict(const VectorXd& x_t, const VectorXd& V, const PredictionOperators& ops, const VectorXd& gamma);

}  // namespace scmpc
