#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "scmpc/fhocp.hpp"
#include "scmpc/model.hpp"
#include "scmpc/rng.hpp"

namespace scmpc {

struct MpcsConfig {
  double p = 0.95;
  double beta = 1e-9;
  /// Scenario count; 0 derives it from (p, beta) and d = m N + 2.
  std::int64_t M = 0;
  /// Required relative decrease of the running cost before a fresh
  /// solution replaces the shifted one, in (0, 1].
  double epsilon = 0.1;
  FhocpConfig fhocp;
  FhocpOptions options;
  /// Multisample omega_t comes from (seed, trial, step t, index i).
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;

  /// Throws ConfigError / DomainError.
  void validate(int m) const;
  /// M, or min_scenarios(p, beta, m N + 2) when M is 0.
  int scenario_count(int m) const;
};

enum class StepCase { kInit, k3a, k3b, k3c };

/// "init", "3a", "3b", "3c".
const char* to_string(StepCase c);

struct ControllerState {
  int t = 0;
  VectorXd V;  // running corrections v_{0|t} .. v_{N-1|t}
  double z = 0.0;
  double q = 0.0;
  StepCase last_case = StepCase::kInit;
  VectorXd prev_x;
  double prev_dist = 0.0;  // d(prev_x, X_f)
};

struct StepDiagnostics {
  int t = 0;
  VectorXd x;
  VectorXd u;
  StepCase step_case = StepCase::kInit;
  double z = 0.0;  // running values after the step
  double q = 0.0;
  double z_star = 0.0;  // fresh solution; +inf when the solve failed
  double q_star = 0.0;
  double dist = 0.0;  // d(x_t, X_f)
  int M = 0;
  int solver_iters = 0;
  SolverStatus status = SolverStatus::kSolved;
};

struct ControlStep {
  ControllerState state;
  VectorXd u;
  StepDiagnostics diag;
};

/// Euclidean distance from x to {y : y' Q_f y <= 1}.
double distance_to_terminal(const VectorXd& x, const MatrixXd& Q_f);

/// Case of one step given the fresh cost z*, threshold z_{t-1} - eps d(x_{t-1}),
/// shifted cost z~ and d(x_t). Comparisons carry an absolute slack of 1e-9 that
/// favours 3c on the first test and 3b on the second.
StepCase decide_case(double z_star, double threshold, double z_tilde, double dist_now);

/// Shifted candidate (v_1 .. v_{N-1}, 0).
VectorXd shift_corrections(const VectorXd& V, int m);

/// Solves P(x_0, omega_0) and returns u_0 = K_f x_0 + v_{0|0}. Throws
/// StatusNotSolved when that first solve fails.
ControlStep mpcs_init(const VectorXd& x0, const UncertainModel& model, const MpcsConfig& cfg);

/// mpcs_init for an already solved P(x_0, omega_0) over M scenarios.
ControlStep mpcs_init_with_solution(const VectorXd& x0, const FhocpSolution& sol, int M, const UncertainModel& model,
                                    const MpcsConfig& cfg);

/// omega_t of the controller: draw i comes from (seed, trial, t, i).
Multisample controller_multisample(const UncertainModel& model, const MpcsConfig& cfg, int t, int M);

/// One step of the receding-horizon loop at the observed x_t: draws omega_t,
/// solves, picks the case and emits u_t. A failed solve counts as z* = +inf.
ControlStep mpcs_step(const ControllerState& state, const VectorXd& x_t, const UncertainModel& model,
                      const MpcsConfig& cfg);

/// The case logic and state update of mpcs_step for a given fresh solution.
ControlStep mpcs_step_with_solution(const ControllerState& state, const VectorXd& x_t, const FhocpSolution& fresh,
                                    const UncertainModel& model, const MpcsConfig& cfg);

/// Trace CSV: t, x1..xn, u1..um, case, z, q, z_star, q_star, dist, solver_iters.
void write_trace_header(std::ostream& out, int n, int m);
void write_trace_row(std::ostream& out, const StepDiagnostics& d);
void write_trace_csv(std::ostream& out, const std::vector<StepDiagnostics>& trace, int n, int m);

}  // namespace scmpc
