#pragma once

#include <Eigen/Dense>

// Second-order cone arithmetic shared by the interior-point solver and its
// tests. Cone convention: u = (u_0, u_1) with u_0 >= ||u_1||.
namespace scmpc::detail {

/// sqrt(u_0^2 - ||u_1||^2), factored to avoid cancellation near the boundary.
double soc_norm_j(const Eigen::Ref<const Eigen::VectorXd>& u);

/// Nesterov-Todd scaling W = beta (2 v v' - J), J = diag(1, -1, ..., -1),
/// with v'Jv = 1. W is symmetric and W z = W^-1 s = lambda.
struct SocScaling {
  double beta = 1.0;
  Eigen::VectorXd v;
};

SocScaling soc_nt_scaling(const Eigen::Ref<const Eigen::VectorXd>& s, const Eigen::Ref<const Eigen::VectorXd>& z);
void soc_apply_w(const SocScaling& w, const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Ref<Eigen::VectorXd> out);
void soc_apply_winv(const SocScaling& w, const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Ref<Eigen::VectorXd> out);

/// Largest step t >= 0 with u + t d in the cone (u interior); +inf if unbounded.
double soc_max_step(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& d);

/// Jordan product (u'v, u_0 v_1 + v_0 u_1).
void soc_jordan_product(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v,
                        Eigen::Ref<Eigen::VectorXd> out);
/// Solves lambda o x = b for x (lambda interior).
void soc_jordan_solve(const Eigen::Ref<const Eigen::VectorXd>& lambda, const Eigen::Ref<const Eigen::VectorXd>& b,
                      Eigen::Ref<Eigen::VectorXd> out);

}  // namespace scmpc::detail
