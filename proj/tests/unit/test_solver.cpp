#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "../common/planted.hpp"
#include "scmpc/cone_program.hpp"
#include "scmpc/errors.hpp"
#include "scmpc/solver.hpp"

using namespace scmpc;
using scmpc::testing::make_planted;
using scmpc::testing::PlantedShape;

namespace {

ConicProgram dense_program(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                           std::vector<ConeBlock> cones) {
  ConicProgram p;
  p.A = A.sparseView();
  p.b = b;
  p.c = c;
  p.cones = std::move(cones);
  return p;
}

double rel_err(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

PlantedShape shape_for(int k) {
  PlantedShape s;
  s.n = 3 + k % 7;
  s.orthant = s.n + 2 + k % 5;
  s.soc = 1 + k % 4;
  s.rotated = k % 3;
  return s;
}

}  // namespace

TEST(Solver, LinearToy) {
  // min x  s.t.  x - 1 >= 0
  const auto p = dense_program(Eigen::MatrixXd::Constant(1, 1, -1), Eigen::VectorXd::Constant(1, -1),
                               Eigen::VectorXd::Ones(1), {{ConeKind::kNonnegative, 1}});
  const SolverResult r = solve(p);
  ASSERT_EQ(r.status, SolverStatus::kSolved);
  EXPECT_NEAR(r.x(0), 1.0, 1e-7);
}

TEST(Solver, SecondOrderToy) {
  // min t  s.t.  ||(3, 4)|| <= t
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 1);
  A(0, 0) = -1;
  const auto p = dense_program(A, Eigen::Vector3d(0, 3, 4), Eigen::VectorXd::Ones(1), {{ConeKind::kSecondOrder, 3}});
  const SolverResult r = solve(p);
  ASSERT_EQ(r.status, SolverStatus::kSolved);
  EXPECT_NEAR(r.x(0), 5.0, 1e-7);
}

TEST(Solver, RotatedToy) {
  // min x  s.t.  2 x (1/2) >= 3^2, i.e. x >= 9
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 1);
  A(0, 0) = -1;
  const auto p = dense_program(A, Eigen::Vector3d(0, 0.5, 3), Eigen::VectorXd::Ones(1),
                               {{ConeKind::kRotatedSecondOrder, 3}});
  const SolverResult r = solve(p);
  ASSERT_EQ(r.status, SolverStatus::kSolved);
  EXPECT_NEAR(r.x(0), 9.0, 1e-6);
}

TEST(Solver, PlantedOptimum) {
  std::mt19937_64 g(2024);
  for (int k = 0; k < 100; ++k) {
    const auto planted = make_planted(g, shape_for(k));
    const SolverResult r = solve(planted.program);
    ASSERT_EQ(r.status, SolverStatus::kSolved) << "instance " << k;
    EXPECT_LE(rel_err(r.primal_objective, planted.optimum), 1e-6) << "instance " << k;
    EXPECT_LE(r.residuals.primal, 1e-8);
    EXPECT_LE(r.residuals.dual, 1e-8);
    EXPECT_LE(r.residuals.gap, 1e-8);
    // Weak duality.
    EXPECT_GE(r.primal_objective, r.dual_objective - 1e-8 * std::max(1.0, std::abs(r.primal_objective)));
  }
}

TEST(Solver, IteratesStayInCone) {
  std::mt19937_64 g(5);
  const auto planted = make_planted(g, PlantedShape{});
  const SolverResult r = solve(planted.program);
  ASSERT_EQ(r.status, SolverStatus::kSolved);
  int off = 0;
  for (const ConeBlock& c : planted.program.cones) {
    const Eigen::VectorXd s = r.s.segment(off, c.size), y = r.y.segment(off, c.size);
    switch (c.kind) {
      case ConeKind::kNonnegative:
        EXPECT_GE(s.minCoeff(), -1e-9);
        EXPECT_GE(y.minCoeff(), -1e-9);
        break;
      case ConeKind::kSecondOrder:
        EXPECT_GE(s(0) - s.tail(c.size - 1).norm(), -1e-7);
        EXPECT_GE(y(0) - y.tail(c.size - 1).norm(), -1e-7);
        break;
      case ConeKind::kRotatedSecondOrder:
        EXPECT_GE(2 * s(0) * s(1) - s.tail(c.size - 2).squaredNorm(), -1e-7);
        EXPECT_GE(2 * y(0) * y(1) - y.tail(c.size - 2).squaredNorm(), -1e-7);
        break;
    }
    off += c.size;
  }
}

TEST(Solver, ScaleInvariance) {
  std::mt19937_64 g(77);
  for (int k = 0; k < 100; ++k) {
    auto planted = make_planted(g, shape_for(k));
    const SolverResult a = solve(planted.program);
    planted.program.c *= 10.0;
    const SolverResult b = solve(planted.program);
    ASSERT_EQ(a.status, SolverStatus::kSolved);
    ASSERT_EQ(b.status, SolverStatus::kSolved);
    const double scale = std::max(1.0, planted.x.cwiseAbs().maxCoeff());
    EXPECT_LE((a.x - b.x).cwiseAbs().maxCoeff() / scale, 1e-6) << "instance " << k;
    EXPECT_LE(rel_err(b.primal_objective, 10.0 * planted.optimum), 1e-6);
  }
}

TEST(Solver, Deterministic) {
  std::mt19937_64 g(9);
  const auto planted = make_planted(g, PlantedShape{8, 14, 5, 3, 0.5});
  const SolverResult a = solve(planted.program);
  const SolverResult b = solve(planted.program);
  EXPECT_EQ(a.iters, b.iters);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.s, b.s);
}

TEST(Solver, WithoutEquilibration) {
  std::mt19937_64 g(31);
  SolverSettings st;
  st.scaling = false;
  for (int k = 0; k < 20; ++k) {
    const auto planted = make_planted(g, shape_for(k));
    const SolverResult r = solve(planted.program, st);
    ASSERT_EQ(r.status, SolverStatus::kSolved);
    EXPECT_LE(rel_err(r.primal_objective, planted.optimum), 1e-6);
  }
}

TEST(Solver, IterationCap) {
  std::mt19937_64 g(3);
  const auto planted = make_planted(g, PlantedShape{});
  SolverSettings st;
  st.max_iters = 2;
  const SolverResult r = solve(planted.program, st);
  EXPECT_EQ(r.status, SolverStatus::kMaxIters);
  EXPECT_EQ(r.iters, 2);
}

TEST(Solver, RejectsBadPrograms) {
  auto p = dense_program(Eigen::MatrixXd::Ones(2, 1), Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(1),
                         {{ConeKind::kNonnegative, 1}});
  EXPECT_THROW(solve(p), Error);
  p.cones = {{ConeKind::kNonnegative, 2}};
  p.c = Eigen::VectorXd::Ones(3);
  EXPECT_THROW(solve(p), DimensionMismatch);
}

TEST(ConeProgramText, RoundTrip) {
  std::mt19937_64 g(12);
  auto planted = make_planted(g, PlantedShape{});
  planted.program.var_map = {{"x", 0, 3}, {"rest", 3, 2}};
  std::stringstream ss;
  write_program_text(ss, planted.program);
  const ConicProgram q = read_program_text(ss);
  const auto& p = planted.program;
  EXPECT_EQ(q.c, p.c);
  EXPECT_EQ(q.b, p.b);
  EXPECT_EQ(Eigen::MatrixXd(q.A), Eigen::MatrixXd(p.A));
  ASSERT_EQ(q.cones.size(), p.cones.size());
  for (std::size_t i = 0; i < p.cones.size(); ++i) {
    EXPECT_EQ(q.cones[i].kind, p.cones[i].kind);
    EXPECT_EQ(q.cones[i].size, p.cones[i].size);
  }
  ASSERT_EQ(q.var_map.size(), 2u);
  EXPECT_EQ(q.var_map[1].name, "rest");
  EXPECT_EQ(q.find("x")->length, 3);
  EXPECT_EQ(q.find("nope"), nullptr);
}

TEST(ConeProgramText, RejectsGarbage) {
  std::stringstream ss("not-a-program 1\n");
  EXPECT_THROW(read_program_text(ss), Error);
}

TEST(ConeProgram, Validate) {
  std::mt19937_64 g(1);
  auto p = make_planted(g, PlantedShape{}).program;
  EXPECT_NO_THROW(p.validate());
  p.var_map = {{"a", 0, 3}, {"b", 2, 2}};
  EXPECT_THROW(p.validate(), Error);
  p.var_map = {{"a", 0, 30}};
  EXPECT_THROW(p.validate(), Error);
}
