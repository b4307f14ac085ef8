#include "scmpc/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "scmpc/errors.hpp"
#include "scmpc/samplesize.hpp"

namespace scmpc {

namespace {

constexpr double kCaseTol = 1e-9;

VectorXd control(const UncertainModel& model, const VectorXd& x, const VectorXd& V) {
  return model.K_f() * x + V.head(model.m());
}

}  // namespace

Multisample controller_multisample(const UncertainModel& model, const MpcsConfig& cfg, int t, int M) {
  StreamKey key;
  key.master_seed = cfg.seed;
  key.trial = cfg.trial;
  key.step = static_cast<std::uint64_t>(t);
  key.purpose = StreamPurpose::kScenario;
  return draw_multisample(model, M, cfg.fhocp.N, key);
}

void MpcsConfig::validate(int m) const {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in (0, 1]");
  if (M < 0) throw ConfigError("M must be non-negative");
  if (M == 0 && !(p > 0.0 && p < 1.0 && beta > 0.0 && beta < 1.0)) {
    throw DomainError("p and beta must lie in (0, 1) when M is derived");
  }
  if (M > std::numeric_limits<int>::max()) throw ConfigError("M is too large");
  fhocp.validate(m);
}

int MpcsConfig::scenario_count(int m) const {
  if (M > 0) return static_cast<int>(M);
  const std::int64_t derived = min_scenarios(p, beta, decision_count(m, fhocp.N));
  if (derived > std::numeric_limits<int>::max()) throw Overflow("scenario count does not fit an int");
  return static_cast<int>(derived);
}

const char* to_string(StepCase c) {
  switch (c) {
    case StepCase::kInit:
      return "init";
    case StepCase::k3a:
      return "3a";
    case StepCase::k3b:
      return "3b";
    case StepCase::k3c:
      return "3c";
  }
  return "unknown";
}

double distance_to_terminal(const VectorXd& x, const MatrixXd& Q_f) {
  return Ellipsoid(Q_f).distance(x);
}

StepCase decide_case(double z_star, double threshold, double z_tilde, double dist_now) {
  if (z_star <= threshold + kCaseTol) return StepCase::k3c;
  if (z_tilde < dist_now - kCaseTol) return StepCase::k3a;
  return StepCase::k3b;
}

VectorXd shift_corrections(const VectorXd& V, int m) {
  if (m <= 0 || V.size() % m != 0) throw DimensionMismatch("corrections are not a whole number of blocks");
  VectorXd out = VectorXd::Zero(V.size());
  out.head(V.size() - m) = V.tail(V.size() - m);
  return out;
}

ControlStep mpcs_init(const VectorXd& x0, const UncertainModel& model, const MpcsConfig& cfg) {
  cfg.validate(model.m());
  const int M = cfg.scenario_count(model.m());
  const FhocpSolution sol = solve_fhocp(x0, controller_multisample(model, cfg, 0, M), model, cfg.fhocp, cfg.options);
  return mpcs_init_with_solution(x0, sol, M, model, cfg);
}

ControlStep mpcs_init_with_solution(const VectorXd& x0, const FhocpSolution& sol, int M, const UncertainModel& model,
                                    const MpcsConfig& cfg) {
  if (!sol.solved()) {
    throw StatusNotSolved(std::string("initial FHOCP solve ended with status ") + to_string(sol.status));
  }
  if (sol.V_star.size() != static_cast<Eigen::Index>(cfg.fhocp.N) * model.m()) {
    throw DimensionMismatch("initial solution has the wrong correction length");
  }
  ControlStep out;
  auto& st = out.state;
  st.t = 1;
  st.V = sol.V_star;
  st.z = std::max(sol.z_star, 0.0);
  st.q = std::max(sol.q_star, 0.0);
  st.last_case = StepCase::kInit;
  st.prev_x = x0;
  st.prev_dist = model.terminal_set().distance(x0);
  out.u = control(model, x0, st.V);

  auto& d = out.diag;
  d.t = 0;
  d.x = x0;
  d.u = out.u;
  d.step_case = StepCase::kInit;
  d.z = st.z;
  d.q = st.q;
  d.z_star = sol.z_star;
  d.q_star = sol.q_star;
  d.dist = st.prev_dist;
  d.M = M;
  d.solver_iters = sol.iters;
  d.status = sol.status;
  return out;
}

ControlStep mpcs_step(const ControllerState& state, const VectorXd& x_t, const UncertainModel& model,
                      const MpcsConfig& cfg) {
  cfg.validate(model.m());
  const int M = cfg.scenario_count(model.m());
  // The shifted sequence is usually close to the new optimum; it picks the
  // first working set.
  FhocpOptions options = cfg.options;
  if (options.seed_V.size() == 0 && state.V.size() == static_cast<Eigen::Index>(cfg.fhocp.N) * model.m()) {
    options.seed_V = shift_corrections(state.V, model.m());
  }
  FhocpSolution fresh = solve_fhocp(x_t, controller_multisample(model, cfg, state.t, M), model, cfg.fhocp, options);
  if (!fresh.solved()) {
    fresh.z_star = std::numeric_limits<double>::infinity();
    fresh.objective = std::numeric_limits<double>::infinity();
  }
  ControlStep out = mpcs_step_with_solution(state, x_t, fresh, model, cfg);
  out.diag.M = M;
  return out;
}

ControlStep mpcs_step_with_solution(const ControllerState& state, const VectorXd& x_t, const FhocpSolution& fresh,
                                    const UncertainModel& model, const MpcsConfig& cfg) {
  const int m = model.m();
  const Eigen::Index nV = static_cast<Eigen::Index>(cfg.fhocp.N) * m;
  if (state.V.size() != nV) throw DimensionMismatch("controller state has the wrong correction length");
  if (x_t.size() != model.n()) throw DimensionMismatch("x_t has wrong dimension");
  if (!(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0)) throw ConfigError("epsilon must lie in (0, 1]");

  const double dist_now = model.terminal_set().distance(x_t);
  const double z_tilde = std::max(0.0, state.z - state.prev_dist);
  const double threshold = state.z - cfg.epsilon * state.prev_dist;
  const double z_star = fresh.solved() ? fresh.z_star : std::numeric_limits<double>::infinity();
  const StepCase c = decide_case(z_star, threshold, z_tilde, dist_now);

  ControlStep out;
  auto& st = out.state;
  switch (c) {
    case StepCase::k3a:
      st.V = shift_corrections(state.V, m);
      st.z = 0.0;
      st.q = state.q;
      break;
    case StepCase::k3b:
      st.V = shift_corrections(state.V, m);
      st.z = z_tilde;
      st.q = state.q;
      break;
    case StepCase::k3c:
      if (fresh.V_star.size() != nV) throw DimensionMismatch("fresh solution has the wrong correction length");
      st.V = fresh.V_star;
      st.z = std::max(fresh.z_star, 0.0);
      st.q = std::max(fresh.q_star, 0.0);
      break;
    case StepCase::kInit:
      throw DomainError("decide_case returned init");
  }
  st.t = state.t + 1;
  st.last_case = c;
  st.prev_x = x_t;
  st.prev_dist = dist_now;
  out.u = control(model, x_t, st.V);

  auto& d = out.diag;
  d.t = state.t;
  d.x = x_t;
  d.u = out.u;
  d.step_case = c;
  d.z = st.z;
  d.q = st.q;
  d.z_star = z_star;
  d.q_star = fresh.q_star;
  d.dist = dist_now;
  d.solver_iters = fresh.iters;
  d.status = fresh.status;
  return out;
}

void write_trace_header(std::ostream& out, int n, int m) {
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  for (int i = 1; i <= m; ++i) out << ",u" << i;
  out << ",case,z,q,z_star,q_star,dist,solver_iters\n";
}

void write_trace_row(std::ostream& out, const StepDiagnostics& d) {
  const auto old = out.precision(17);
  out << d.t;
  for (Eigen::Index i = 0; i < d.x.size(); ++i) out << ',' << d.x(i);
  for (Eigen::Index i = 0; i < d.u.size(); ++i) out << ',' << d.u(i);
  out << ',' << to_string(d.step_case) << ',' << d.z << ',' << d.q << ',' << d.z_star << ',' << d.q_star << ','
      << d.dist << ',' << d.solver_iters << '\n';
  out.precision(old);
}

void write_trace_csv(std::ostream& out, const std::vector<StepDiagnostics>& trace, int n, int m) {
  write_trace_header(out, n, m);
  for (const auto& d : trace) write_trace_row(out, d);
}

}  // namespace scmpc
