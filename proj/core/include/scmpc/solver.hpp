#pragma once

#include <string>

#include <Eigen/Dense>

#include "scmpc/cone_program.hpp"

namespace scmpc {

struct SolverSettings {
  double eps_primal = 1e-8;
  double eps_dual = 1e-8;
  double eps_gap = 1e-8;
  int max_iters = 100'000;
  /// Ruiz equilibration of rows and columns before iterating.
  bool scaling = true;
};

enum class SolverStatus { kSolved, kMaxIters, kNumericalFailure };

const char* to_string(SolverStatus status);

/// Relative KKT residuals at the returned point:
///   primal = ||A x + s - b|| / max(1, ||b||)
///   dual   = ||A'y + c|| / max(1, ||c||)   (stationarity, y in K*)
///   gap    = min(s'y, s'y / |objective|)
struct SolverResiduals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};

struct SolverResult {
  Eigen::VectorXd x;  // primal decision vector
  Eigen::VectorXd s;  // slack, b - A x, in K
  Eigen::VectorXd y;  // dual multipliers, in K* = K
  SolverStatus status = SolverStatus::kNumericalFailure;
  int iters = 0;
  SolverResiduals residuals;
  double primal_objective = 0.0;  // c'x
  double dual_objective = 0.0;    // -b'y
};

/// Primal-dual interior-point method with Nesterov-Todd scaling and
/// Mehrotra predictor-corrector steps for nonnegative, second-order and
/// rotated second-order cones. Each Newton system is solved through the
/// statically regularised quasi-definite KKT matrix [dI A'; A -(W^2 + dI)],
/// factored with a sparse LDL' (AMD ordering, pattern analysed once) and
/// polished by iterative refinement against the unregularised system.
/// Stops early with kNumericalFailure when progress stalls.
///
/// Single-threaded and reentrant; identical inputs give bit-identical
/// outputs. Throws DimensionMismatch / ConfigError on invalid programs.
SolverResult solve(const ConicProgram& program, const SolverSettings& settings = {});

}  // namespace scmpc
