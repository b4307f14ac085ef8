#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "scmpc/controller.hpp"
#include "scmpc/ellipsoid.hpp"
#include "scmpc/errors.hpp"
#include "scmpc/model.hpp"

using namespace scmpc;

namespace {

// Oracle: scan the boundary L'^-1 (cos a, sin a) of a 2-D ellipsoid, then
// refine the best angle by golden-section search.
double brute_distance_2d(const Eigen::Matrix2d& Q, const Eigen::Vector2d& x) {
  if (x.dot(Q * x) <= 1.0) return 0.0;
  const Eigen::Matrix2d L = Q.llt().matrixL();
  const Eigen::Matrix2d Linv_t = L.transpose().inverse();
  auto dist = [&](double a) { return (x - Linv_t * Eigen::Vector2d(std::cos(a), std::sin(a))).norm(); };
  constexpr int kGrid = 20000;
  double best_a = 0.0, best = dist(0.0);
  for (int k = 1; k < kGrid; ++k) {
    const double a = 2 * std::numbers::pi * k / kGrid;
    const double d = dist(a);
    if (d < best) best = d, best_a = a;
  }
  double lo = best_a - 2 * std::numbers::pi / kGrid, hi = best_a + 2 * std::numbers::pi / kGrid;
  const double r = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 100; ++it) {
    const double a = hi - r * (hi - lo), b = lo + r * (hi - lo);
    if (dist(a) < dist(b)) hi = b; else lo = a;
  }
  return std::min(best, dist(0.5 * (lo + hi)));
}

}  // namespace

TEST(Ellipsoid, Interior) {
  const Ellipsoid e(example_plant().Q_f());
  EXPECT_EQ(e.distance(Eigen::Vector2d(0.5, -0.5)), 0.0);
  EXPECT_EQ(distance_to_terminal(Eigen::Vector2d::Zero(), example_plant().Q_f()), 0.0);
}

TEST(Ellipsoid, UnitBall) {
  EXPECT_NEAR(distance_to_terminal(Eigen::Vector2d(3, 4), Eigen::Matrix2d::Identity()), 4.0, 1e-12);
}

TEST(Ellipsoid, ExampleInitialState) {
  const Eigen::Matrix2d Q = example_plant().Q_f();
  const Eigen::Vector2d x0(5, 2.75);
  EXPECT_NEAR(distance_to_terminal(x0, Q), brute_distance_2d(Q, x0), 1e-4);
}

TEST(Ellipsoid, RandomPointsAgainstBruteForce) {
  RandomStream rng(StreamKey{2, 0, 0, 0, StreamPurpose::kFuzz});
  for (int k = 0; k < 200; ++k) {
    Eigen::Matrix2d R = Eigen::Matrix2d::Random();
    Eigen::Matrix2d Q = R * R.transpose() + 0.05 * Eigen::Matrix2d::Identity();
    const Ellipsoid e(Q);
    const Eigen::Vector2d x(rng.uniform(-20, 20), rng.uniform(-20, 20));
    ASSERT_NEAR(e.distance(x), brute_distance_2d(Q, x), 1e-6);
  }
}

TEST(Ellipsoid, ProjectionIsOnBoundaryAndOptimal) {
  Eigen::Matrix3d Q;
  Q << 2, 0.3, 0.1, 0.3, 1, -0.2, 0.1, -0.2, 0.5;
  const Ellipsoid e(Q);
  const Eigen::Vector3d x(4, -3, 2);
  const Eigen::VectorXd y = e.project(x);
  EXPECT_NEAR(y.dot(Q * y), 1.0, 1e-9);
  // KKT: x - y is parallel to the normal Q y.
  const Eigen::Vector3d r = x - y, nrm = Q * y;
  EXPECT_LT(r.cross(nrm).norm() / (r.norm() * nrm.norm()), 1e-9);
  EXPECT_GT(r.dot(nrm), 0.0);
  EXPECT_NEAR(e.distance(x), r.norm(), 1e-9);
}

TEST(Ellipsoid, Rejects) {
  Eigen::Matrix2d Q;
  Q << 1, 2, 2, 1;
  EXPECT_THROW(Ellipsoid{Q}, CholeskyFailure);
}
