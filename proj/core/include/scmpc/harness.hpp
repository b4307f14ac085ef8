#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scmpc/controller.hpp"
#include "scmpc/model.hpp"

namespace scmpc {

enum class TrialMode { kFh, kRh, kBoth };

const char* to_string(TrialMode mode);

/// One closed-loop or open-loop experiment, repeated n_trials times.
struct TrialConfig {
  std::string model = "paper-example";  // name or path, see resolve_model
  VectorXd x0;                          // empty: (5, 2.75)
  int N = 10;
  double p = 0.95;
  double beta = 1e-9;
  std::int64_t M = 0;  // 0: derived from (p, beta)
  double epsilon = 0.1;
  double alpha = 1e4;
  MatrixXd Lambda;  // empty: identity
  /// Closed-loop control steps in rh mode; 0 means N + 10.
  int T_sim = 0;
  int n_trials = 5000;
  std::uint64_t seed = 1;
  TrialMode mode = TrialMode::kBoth;
  /// Worker threads for monte_carlo; 0 uses the hardware concurrency.
  int threads = 0;

  /// Keys of the config JSON: model, x0, N, p, beta, M, epsilon, alpha,
  /// lambda (number or m x m matrix), T_sim, n_trials, seed, mode
  /// ("fh" | "rh" | "both"), threads. Missing keys keep their defaults.
  /// Throws ConfigError.
  static TrialConfig from_json_text(const std::string& text);
  static TrialConfig from_file(const std::string& path);

  int steps() const { return T_sim == 0 ? N + 10 : T_sim; }
  VectorXd initial_state() const;
  /// Throws ConfigError (n_trials < 1, T_sim < N + 10 in rh mode, ...).
  void validate(const UncertainModel& model) const;
  /// Controller settings of one trial; a 1 x 1 Lambda becomes lambda I_m.
  MpcsConfig mpcs(int m, std::uint64_t trial) const;
};

enum class FailureKind { kNone, kState, kInput, kTerminal, kSolver };

/// "none", "state", "input", "terminal", "solver".
const char* to_string(FailureKind kind);

struct TrialRecord {
  std::uint64_t trial = 0;
  VectorXd theta;  // the plant's actual parameter
  bool failure = false;
  FailureKind failure_kind = FailureKind::kNone;
  int first_failure_t = -1;
  std::vector<StepDiagnostics> trace;  // rh mode only
};

/// n_trials of the full-length study (the CLI's --full).
inline constexpr int kFullTrialCount = 100'000;

/// Hard constraints are checked with this absolute slack on every row.
inline constexpr double kHardConstraintTol = 1e-7;

/// Rolls the true plant forward N = V_star.size() / m steps from x0 under
/// u_j = K_f x_j + v_j and the disturbances of true_delta. Fails on the
/// first violated input (j = 0..N-1), state (j = 1..N) or terminal
/// (x_N in X_f) constraint, at the constraint data of true_delta.theta.
TrialRecord simulate_fh(const UncertainModel& model, const VectorXd& V_star, const ScenarioDraw& true_delta,
                        const VectorXd& x0);

/// Open-loop trial `trial`: solve P(x0, omega) and run simulate_fh on a
/// fresh true draw. A failed solve is recorded as kSolver.
TrialRecord run_fh_trial(const UncertainModel& model, const TrialConfig& cfg, std::uint64_t trial);

/// Closed-loop trial `trial` under MPCS for cfg.steps() control steps. The
/// true theta is drawn once per trial, gamma_t afresh each step. Fails on a
/// violated input (t = 0..N+9) or state (t = 1..N+10) constraint, or
/// x_{N+10} outside X_f. A failed initial solve is recorded as kSolver.
TrialRecord simulate_rh(const UncertainModel& model, const TrialConfig& cfg, std::uint64_t trial,
                        bool keep_trace = true);

/// Draws of the plant's actual theta and gamma sequence for a trial.
VectorXd true_theta(const UncertainModel& model, std::uint64_t seed, std::uint64_t trial);
MatrixXd true_gamma(const UncertainModel& model, std::uint64_t seed, std::uint64_t trial, int steps);

struct ModeSummary {
  int n_trials = 0;
  int n_failures = 0;
  /// Indexed by FailureKind.
  std::array<int, 5> kinds{};
  double p_hat() const { return n_trials == 0 ? 0.0 : static_cast<double>(n_trials - n_failures) / n_trials; }
};

struct MonteCarloSummary {
  TrialConfig config;
  int M = 0;
  bool has_fh = false;
  bool has_rh = false;
  ModeSummary fh;
  ModeSummary rh;
  double wall_seconds = 0.0;
};

/// p_hat = (n_trials - n_failures) / n_trials.
double success_rate(int n_trials, int n_failures);

/// Runs all trials of the configured mode(s) on cfg.threads workers. Trial
/// k depends only on (seed, k), so the summary does not depend on the
/// thread count. progress, when set, is called after each finished trial
/// with the number done so far (from worker threads, serialized).
MonteCarloSummary monte_carlo(const TrialConfig& cfg, const std::function<void(int)>& progress = {});

/// {p_hat_fh?, p_hat_rh?, n_trials, n_failures: {fh?, rh?},
///  failure_kinds: {fh?: {state, input, terminal, solver}, rh?: {...}},
///  M, p, beta, seed, wall_seconds}
std::string summary_json(const MonteCarloSummary& summary);

}  // namespace scmpc
