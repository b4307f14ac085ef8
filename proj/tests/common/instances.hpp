#pragma once

// Small models with known answers.

#include <Eigen/Dense>

#include "scmpc/model.hpp"

namespace scmpc::testing {

// x+ = x + u, no uncertainty, |x| <= 10, |u| <= 10, K_f = 0, X_f = [-1, 1].
// From x = 3 with N = 1 the terminal constraint forces v in [-4, -2] and the
// cost |3| - 1 + v^2 is smallest at v = -2: z* = 2 + 4 = 6.
inline UncertainModel scalar_plant() {
  UncertainModel::Spec spec;
  spec.name = "scalar";
  spec.dims = {1, 1, 0, 0};
  spec.matrix_eval = [](const VectorXd&) {
    SystemMatrices s;
    s.A = MatrixXd::Ones(1, 1);
    s.B = MatrixXd::Ones(1, 1);
    s.B_gamma = MatrixXd::Zero(1, 0);
    return s;
  };
  spec.constraint_eval = [](const VectorXd&) {
    ConstraintData c;
    c.G_x.resize(2, 1);
    c.G_x << 1, -1;
    c.g_x = Eigen::Vector2d(10, 10);
    c.G_u.resize(2, 1);
    c.G_u << 1, -1;
    c.g_u = Eigen::Vector2d(10, 10);
    return c;
  };
  spec.K_f = MatrixXd::Zero(1, 1);
  spec.Q_f = MatrixXd::Ones(1, 1);
  return UncertainModel(std::move(spec));
}

// The two-state benchmark plant with every parameter pinned at 0 and no
// disturbance.
inline UncertainModel nominal_example_plant() {
  UncertainModel::Spec spec;
  spec.name = "nominal-example";
  spec.dims = {2, 1, 2, 7};
  spec.matrix_eval = [](const VectorXd&) {
    SystemMatrices s;
    s.A.resize(2, 2);
    s.A << 1, 1, 0, 1;
    s.B = Eigen::Vector2d(0, 1);
    s.B_gamma = MatrixXd::Identity(2, 2);
    return s;
  };
  spec.constraint_eval = [](const VectorXd&) {
    ConstraintData c;
    c.G_x.resize(4, 2);
    c.G_x << 1, 0, 0, 1, -1, 0, 0, -1;
    c.g_x = Eigen::Vector4d(10, 10, 10, 10);
    c.G_u.resize(2, 1);
    c.G_u << 1, -1;
    c.g_u = Eigen::Vector2d(5, 5);
    return c;
  };
  spec.theta_distributions.assign(7, Distribution::uniform(0.0, 0.0));
  spec.gamma_sampler = [](RandomStream&) { return VectorXd(VectorXd::Zero(2)); };
  spec.K_f.resize(1, 2);
  spec.K_f << -0.4686, -1.4221;
  spec.Q_f.resize(2, 2);
  spec.Q_f << 0.0539, 0.0724, 0.0724, 0.1724;
  return UncertainModel(std::move(spec));
}

}  // namespace scmpc::testing
