#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "../common/instances.hpp"
#include "scmpc/controller.hpp"
#include "scmpc/errors.hpp"
#include "scmpc/harness.hpp"
#include "scmpc/samplesize.hpp"

using namespace scmpc;
using scmpc::testing::scalar_plant;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Running state (z = 10, d(x_{t-1}) = 2) on the scalar plant, X_f = [-1, 1].
ControllerState synthetic_state(int N) {
  ControllerState s;
  s.t = 5;
  s.V = VectorXd::LinSpaced(N, 1.0, static_cast<double>(N));
  s.z = 10.0;
  s.q = 0.25;
  s.prev_x = VectorXd::Constant(1, 3.0);
  s.prev_dist = 2.0;
  return s;
}

MpcsConfig scalar_cfg(int N) {
  MpcsConfig c;
  c.M = 1;
  c.epsilon = 0.1;
  c.fhocp.N = N;
  c.fhocp.Lambda = MatrixXd::Ones(1, 1);
  return c;
}

FhocpSolution fresh(double z, int N) {
  FhocpSolution f;
  f.V_star = VectorXd::Constant(N, -0.5);
  f.z_star = z;
  f.q_star = 0.125;
  f.objective = z + 1e4 * 0.125;
  f.status = SolverStatus::kSolved;
  return f;
}

}  // namespace

TEST(Controller, Case3c) {
  const int N = 3;
  const UncertainModel model = scalar_plant();
  const ControllerState s = synthetic_state(N);
  const ControlStep out = mpcs_step_with_solution(s, VectorXd::Constant(1, 8.0), fresh(9.0, N), model, scalar_cfg(N));
  EXPECT_EQ(out.diag.step_case, StepCase::k3c);
  EXPECT_EQ(out.state.z, 9.0);
  EXPECT_EQ(out.state.q, 0.125);
  EXPECT_EQ(out.state.V, VectorXd::Constant(N, -0.5));
  EXPECT_EQ(out.u(0), -0.5);
  EXPECT_EQ(out.state.t, 6);
  EXPECT_DOUBLE_EQ(out.state.prev_dist, 7.0);
}

TEST(Controller, Case3b) {
  const int N = 3;
  const UncertainModel model = scalar_plant();
  const ControllerState s = synthetic_state(N);
  // d(x_t) = 8 - 1 = 7, z~ = 8 >= 7.
  const ControlStep out = mpcs_step_with_solution(s, VectorXd::Constant(1, 8.0), fresh(9.9, N), model, scalar_cfg(N));
  EXPECT_EQ(out.diag.step_case, StepCase::k3b);
  EXPECT_EQ(out.state.z, 8.0);
  EXPECT_EQ(out.state.q, 0.25);
  EXPECT_EQ(out.state.V, Eigen::Vector3d(2, 3, 0));
  EXPECT_EQ(out.u(0), 2.0);
  EXPECT_EQ(out.diag.z_star, 9.9);
}

TEST(Controller, Case3a) {
  const int N = 3;
  const UncertainModel model = scalar_plant();
  const ControllerState s = synthetic_state(N);
  // d(x_t) = 9.5 - 1 = 8.5 > z~ = 8.
  const ControlStep out = mpcs_step_with_solution(s, VectorXd::Constant(1, 9.5), fresh(9.9, N), model, scalar_cfg(N));
  EXPECT_EQ(out.diag.step_case, StepCase::k3a);
  EXPECT_EQ(out.state.z, 0.0);
  EXPECT_EQ(out.state.q, 0.25);
  EXPECT_EQ(out.state.V, Eigen::Vector3d(2, 3, 0));
  EXPECT_EQ(out.state.V.tail(1)(0), 0.0);
}

TEST(Controller, FailedSolveFallsBackToShift) {
  const int N = 3;
  const UncertainModel model = scalar_plant();
  const ControllerState s = synthetic_state(N);
  FhocpSolution f = fresh(0.0, N);  // would be 3c if it had solved
  f.status = SolverStatus::kNumericalFailure;
  ControlStep out = mpcs_step_with_solution(s, VectorXd::Constant(1, 8.0), f, model, scalar_cfg(N));
  EXPECT_EQ(out.diag.step_case, StepCase::k3b);
  EXPECT_EQ(out.diag.z_star, kInf);
  out = mpcs_step_with_solution(s, VectorXd::Constant(1, 9.5), f, model, scalar_cfg(N));
  EXPECT_EQ(out.diag.step_case, StepCase::k3a);
}

TEST(Controller, DecideCaseTolerance) {
  EXPECT_EQ(decide_case(9.8 + 5e-10, 9.8, 8, 7), StepCase::k3c);
  EXPECT_EQ(decide_case(9.8 + 1e-6, 9.8, 8, 7), StepCase::k3b);
  EXPECT_EQ(decide_case(9.9, 9.8, 8, 8 + 5e-10), StepCase::k3b);
  EXPECT_EQ(decide_case(9.9, 9.8, 8, 8 + 1e-6), StepCase::k3a);
}

TEST(Controller, CasesExhaustiveAndExclusive) {
  RandomStream rng(StreamKey{1, 0, 0, 0, StreamPurpose::kFuzz});
  int seen[3] = {0, 0, 0};
  for (int k = 0; k < 20000; ++k) {
    const double z_prev = rng.uniform(0, 20), d_prev = rng.uniform(0, z_prev);
    const double eps = rng.uniform(0.01, 1.0);
    const double z_star = rng.uniform(0, 25), d_now = rng.uniform(0, 20);
    const double thr = z_prev - eps * d_prev;
    const double z_tilde = std::max(0.0, z_prev - d_prev);
    const bool a = z_star > thr && z_tilde < d_now;
    const bool b = z_star > thr && z_tilde >= d_now;
    const bool c = z_star <= thr;
    ASSERT_EQ(int(a) + int(b) + int(c), 1);
    const StepCase got = decide_case(z_star, thr, z_tilde, d_now);
    if (std::abs(z_star - thr) > 1e-8 && std::abs(z_tilde - d_now) > 1e-8) {
      ASSERT_EQ(got, a ? StepCase::k3a : b ? StepCase::k3b : StepCase::k3c);
    }
    ++seen[got == StepCase::k3a ? 0 : got == StepCase::k3b ? 1 : 2];
  }
  EXPECT_GT(seen[0], 0);
  EXPECT_GT(seen[1], 0);
  EXPECT_GT(seen[2], 0);
}

TEST(Controller, ShiftCorrections) {
  VectorXd V(6);
  V << 1, 2, 3, 4, 5, 6;
  VectorXd expect(6);
  expect << 3, 4, 5, 6, 0, 0;
  EXPECT_EQ(shift_corrections(V, 2), expect);
  EXPECT_THROW(shift_corrections(V, 4), DimensionMismatch);
}

TEST(Controller, InitScalarHandInstance) {
  const UncertainModel model = scalar_plant();
  const ControlStep out = mpcs_init(VectorXd::Constant(1, 3.0), model, scalar_cfg(1));
  EXPECT_NEAR(out.state.V(0), -2.0, 1e-5);
  EXPECT_NEAR(out.state.z, 6.0, 1e-5);
  EXPECT_NEAR(out.u(0), -2.0, 1e-5);
  EXPECT_EQ(out.diag.step_case, StepCase::kInit);
  EXPECT_EQ(out.state.t, 1);
}

TEST(Controller, InitInsideTerminalSet) {
  const UncertainModel model = example_plant();
  MpcsConfig cfg;
  cfg.p = 0.3;
  cfg.seed = 3;
  const Eigen::Vector2d x0(0.5, -0.5);
  ASSERT_TRUE(model.terminal_set().contains(x0));
  const ControlStep out = mpcs_init(x0, model, cfg);
  EXPECT_NEAR(out.state.z, 0.0, 1e-6);
  EXPECT_NEAR(out.state.q, 0.0, 1e-6);
  EXPECT_NEAR(out.u(0), (model.K_f() * x0)(0), 1e-6);
  EXPECT_EQ(out.diag.M, min_scenarios(0.3, 1e-9, 12));
}

TEST(Controller, ExplicitScenarioCount) {
  const UncertainModel model = example_plant();
  MpcsConfig cfg;
  cfg.M = 890;
  cfg.p = 0.0;  // unused when M is given
  cfg.beta = 0.0;
  EXPECT_NO_THROW(cfg.validate(1));
  EXPECT_EQ(cfg.scenario_count(1), 890);
  const ControlStep out = mpcs_init(Eigen::Vector2d(0.1, 0.1), model, cfg);
  EXPECT_EQ(out.diag.M, 890);
}

TEST(Controller, ConfigValidation) {
  MpcsConfig c;
  c.epsilon = 0.0;
  EXPECT_THROW(c.validate(1), ConfigError);
  c.epsilon = 1.0;
  EXPECT_NO_THROW(c.validate(1));
  c.epsilon = 1.5;
  EXPECT_THROW(c.validate(1), ConfigError);
  c = MpcsConfig{};
  c.p = 1.0;
  EXPECT_THROW(c.validate(1), DomainError);
}

namespace {

struct LoopRecord {
  std::vector<ControlStep> steps;
  std::vector<VectorXd> x;
};

// Closed loop of the benchmark plant under MPCS with the trial's true draws.
LoopRecord run_loop(const UncertainModel& model, const MpcsConfig& cfg, std::uint64_t trial, int T) {
  LoopRecord rec;
  const VectorXd theta = true_theta(model, cfg.seed, trial);
  const MatrixXd gamma = true_gamma(model, cfg.seed, trial, T);
  const auto S = model.evaluate(theta).matrices;
  VectorXd x = Eigen::Vector2d(5, 2.75);
  ControlStep cs = mpcs_init(x, model, cfg);
  for (int t = 0; t < T; ++t) {
    rec.steps.push_back(cs);
    rec.x.push_back(x);
    x = S.A * x + S.B * cs.u + S.B_gamma * gamma.row(t).transpose();
    if (t + 1 < T) cs = mpcs_step(cs.state, x, model, cfg);
  }
  return rec;
}

}  // namespace

TEST(Controller, ClosedLoopInvariants) {
  const UncertainModel model = example_plant();
  MpcsConfig cfg;
  cfg.p = 0.3;
  cfg.seed = 17;
  const int T = 20;
  int abar_runs = 0;
  for (std::uint64_t trial = 0; trial < 6; ++trial) {
    cfg.trial = trial;
    const LoopRecord rec = run_loop(model, cfg, trial, T);
    bool saw_3a = false;
    for (const auto& s : rec.steps) saw_3a |= s.diag.step_case == StepCase::k3a;

    for (int t = 0; t < T; ++t) {
      const auto& d = rec.steps[t].diag;
      const auto& st = rec.steps[t].state;
      // u_t = K_f x_t + v_{0|t}
      EXPECT_EQ(d.u, model.K_f() * rec.x[t] + st.V.head(1));
      EXPECT_GE(st.z, 0.0);
      EXPECT_GE(st.q, 0.0);
      if (d.step_case == StepCase::k3a) EXPECT_EQ(st.z, 0.0);
      if (t > 0 && d.step_case != StepCase::k3c) EXPECT_EQ(st.q, rec.steps[t - 1].state.q);
      if (t > 0 && d.step_case != StepCase::k3c) {
        EXPECT_EQ(st.V, shift_corrections(rec.steps[t - 1].state.V, 1));
      }
    }
    // Shifted steps apply the tail of the last fresh sequence.
    int last_fresh = 0;
    for (int t = 1; t < T; ++t) {
      if (rec.steps[t].diag.step_case == StepCase::k3c) {
        last_fresh = t;
        continue;
      }
      const VectorXd& Vstar = rec.steps[last_fresh].state.V;
      const int k = t - last_fresh;
      const double expect = k < Vstar.size() ? Vstar(k) : 0.0;
      EXPECT_EQ(rec.steps[t].state.V(0), expect);
    }
    if (saw_3a) continue;
    ++abar_runs;
    // Lyapunov-like decrease along the run.
    for (int t = 0; t < T; ++t) {
      const auto& d = rec.steps[t].diag;
      EXPECT_GE(d.z, d.dist - 1e-6) << "trial " << trial << " t " << t;
      if (t + 1 < T) {
        const double dz = rec.steps[t + 1].diag.z - d.z;
        EXPECT_LE(dz, -cfg.epsilon * d.dist + 1e-9) << "trial " << trial << " t " << t;
        if (d.z == 0.0) EXPECT_EQ(rec.steps[t + 1].diag.z, 0.0);
      }
    }
  }
  EXPECT_GT(abar_runs, 0);
}

TEST(Controller, TraceCsv) {
  StepDiagnostics d;
  d.t = 2;
  d.x = Eigen::Vector2d(1.5, -2);
  d.u = VectorXd::Constant(1, 0.25);
  d.step_case = StepCase::k3b;
  d.z = 3;
  d.q = 0;
  d.z_star = kInf;
  d.q_star = 0;
  d.dist = 0.5;
  d.solver_iters = 12;
  std::ostringstream os;
  write_trace_csv(os, {d}, 2, 1);
  EXPECT_EQ(os.str(), "t,x1,x2,u1,case,z,q,z_star,q_star,dist,solver_iters\n2,1.5,-2,0.25,3b,3,0,inf,0,0.5,12\n");
}
