#pragma once

#include <vector>

#include <Eigen/Dense>

#include "scmpc/cone_program.hpp"
#include "scmpc/model.hpp"
#include "scmpc/prediction.hpp"
#include "scmpc/solver.hpp"

namespace scmpc {

struct FhocpConfig {
  int N = 10;
  /// m x m input-correction weight; empty means identity.
  MatrixXd Lambda;
  /// Weight of the violation level q in the objective z + alpha q.
  double alpha = 1e4;

  /// Lambda, or the identity when unset.
  MatrixXd weight(int m) const;
  /// Throws ConfigError (N < 1, alpha <= 0, Lambda not symmetric positive
  /// definite) or DimensionMismatch.
  void validate(int m) const;
};

/// Optimal corrections V* = (v_0, .., v_{N-1}), worst-case cost z* and
/// violation level q* of the scenario program.
struct FhocpSolution {
  VectorXd V_star;
  double z_star = 0.0;
  double q_star = 0.0;
  double objective = 0.0;  // z* + alpha q*
  SolverStatus status = SolverStatus::kNumericalFailure;
  SolverResiduals residuals;
  int iters = 0;               // interior-point iterations over all rounds
  int scenarios_in_program = 0;  // scenarios in the last conic program solved
  int rounds = 0;              // conic solves performed

  bool solved() const { return status == SolverStatus::kSolved; }
};

/// Everything the lowering needs from one draw at a given x_t: the free
/// response x_j = A_cl^j x_t + Upsilon_j gamma (columns j = 0..N) plus the
/// correction operators Phi_j and the draw's constraint data.
struct ScenarioData {
  MatrixXd free;  // n x (N+1)
  PredictionOperators ops;
  ConstraintData constraints;

  /// Predicted state x_j for corrections V (j = 0..N).
  VectorXd state(int j, const VectorXd& V) const;
  /// All of x_0..x_N as columns.
  MatrixXd states(const VectorXd& V) const;
};

ScenarioData prepare_scenario(const VectorXd& x_t, const ScenarioDraw& draw, const UncertainModel& model, int N);

/// Cone program of the scenario FHOCP
///
///   min z + alpha q  s.t.  for every scenario i:
///     sum_j d(x_ij, X_f) + sum_j v_j' Lambda v_j <= z
///     G_x x_ij <= g_x + q       j = 1..N-1
///     G_u u_ij <= g_u + q       j = 0..N-1,  u_ij = K_f x_ij + v_j
///     x_iN' Q_f x_iN <= 1 + q
///   and q >= 0.
///
/// Variables, in order: V (N*m), z, q, then auxiliaries w, y_0 (n), t_0 and
/// per scenario (y_ij, t_ij) for j = 1..N-1. The distance is lifted as
/// ||x_ij - y_ij|| <= t_ij with ||L' y_ij|| <= 1 (Q_f = L L'), the input
/// cost as 2 w (1/2) >= ||L_Lambda' V_j||^2 (one cone, shared by all
/// scenarios) and the terminal condition as 2 (1 + q)(1/2) >= ||L' x_iN||^2.
/// x_0 = x_t is scenario independent, so y_0, t_0 are shared. The lifting
/// leaves the projection of the feasible set onto (V, z, q) unchanged, so
/// the decision dimension is still m N + 2.
///
/// Slices in var_map: "V", "z", "q", "w", "y0", "t0", "aux".
/// Throws DimensionMismatch, ConfigError.
ConicProgram build(const VectorXd& x_t, const Multisample& omega, const UncertainModel& model, const FhocpConfig& cfg);
ConicProgram build(const VectorXd& x_t, const std::vector<const ScenarioData*>& scenarios, const UncertainModel& model,
                   const FhocpConfig& cfg);

/// Reads (V*, z*, q*) out of a solved program. A q* in [-1e-7, 0) is
/// clamped to 0. Throws StatusNotSolved unless result.status is solved and
/// DimensionMismatch when the vector does not fit the program.
FhocpSolution extract(const ConicProgram& program, const SolverResult& result);

enum class FhocpStrategy {
  /// Solve over all M scenarios at once.
  kFull,
  /// Constraint generation: solve over a small working set of scenarios,
  /// add the most violated remaining ones, repeat until none is violated.
  /// The final point solves the full program (a relaxation's optimum that
  /// is feasible for the full problem is optimal for it).
  kWorkingSet,
};

struct FhocpOptions {
  FhocpStrategy strategy = FhocpStrategy::kWorkingSet;
  SolverSettings solver;
  /// Working set: a scenario counts as violated when h > tol (1 + |z|).
  double violation_tol = 1e-7;
  /// Corrections that rank the scenarios for the first working set (the
  /// most violated ones go in). Zero corrections when empty.
  VectorXd seed_V;
};

/// Solves P(x_t, omega). Returns the zero solution without calling the
/// solver when x_t and every scenario's free response stay inside X_f and
/// the constraints (then (0, 0, 0) is feasible with objective 0, the least
/// possible value). A failed solve is reported through status.
FhocpSolution solve_fhocp(const VectorXd& x_t, const Multisample& omega, const UncertainModel& model,
                          const FhocpConfig& cfg, const FhocpOptions& options = {});

/// Scenario cost J_i(V) = sum_{j<N} d(x_ij, X_f) + sum_j v_j' Lambda v_j.
double scenario_cost(const ScenarioData& sc, const VectorXd& V, const UncertainModel& model, const MatrixXd& Lambda);

/// h(s, x_t, delta): the largest of the state rows (j = 1..N-1), input
/// rows (j = 0..N-1) and terminal condition, each minus q, together with
/// -q and J - z. At most 0 when delta satisfies every constraint at
/// violation level q*.
double violation_h(const FhocpSolution& sol, const VectorXd& x_t, const ScenarioDraw& delta, const UncertainModel& model,
                   const FhocpConfig& cfg);
double violation_h(const ScenarioData& sc, const VectorXd& V, double z, double q, const UncertainModel& model,
                   const MatrixXd& Lambda);

/// Fraction of K fresh draws (streams base with index 0..K-1, purpose
/// kReliability) with h <= tol.
double reliability_estimate(const FhocpSolution& sol, const VectorXd& x_t, const UncertainModel& model,
                            const FhocpConfig& cfg, int K, const StreamKey& base, double tol = 1e-6);

}  // namespace scmpc
