#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scmpc/ellipsoid.hpp"
#include "scmpc/rng.hpp"

namespace scmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct SystemMatrices {
  MatrixXd A;        // n x n
  MatrixXd B;        // n x m
  MatrixXd B_gamma;  // n x m_gamma
};

/// Affine constraint sets: G_x x <= g_x and G_u u <= g_u.
struct ConstraintData {
  MatrixXd G_x;
  VectorXd g_x;
  MatrixXd G_u;
  VectorXd g_u;
};

struct ModelEvaluation {
  SystemMatrices matrices;
  ConstraintData constraints;
};

/// Per-component distribution of theta (or of a gamma component in JSON models).
struct Distribution {
  enum class Kind { kUniform, kGaussian };

  Kind kind = Kind::kUniform;
  double a = 0.0;  // uniform: low, gaussian: mean
  double b = 0.0;  // uniform: high, gaussian: standard deviation

  static Distribution uniform(double low, double high) { return {Kind::kUniform, low, high}; }
  static Distribution gaussian(double mean, double stddev) { return {Kind::kGaussian, mean, stddev}; }

  double sample(RandomStream& rng) const;
};

struct ModelDimensions {
  int n = 0;          // state
  int m = 0;          // input
  int m_gamma = 0;    // disturbance
  int theta_dim = 0;  // uncertain parameters
};

/// One extraction delta = (theta, gamma_0 .. gamma_{N-1}).
struct ScenarioDraw {
  VectorXd theta;
  MatrixXd gamma_seq;  // N x m_gamma, row j is gamma_j

  int horizon() const { return static_cast<int>(gamma_seq.rows()); }
  /// gamma_seq stacked step by step into an N*m_gamma vector.
  VectorXd stacked_gamma() const;
};

/// M independent draws forming omega_t. Draw i came from the stream
/// `base` with its index field set to i.
struct Multisample {
  std::vector<ScenarioDraw> draws;
  StreamKey base;

  int size() const { return static_cast<int>(draws.size()); }
};

/// Uncertain LTI plant x+ = A(theta) x + B(theta) u + B_gamma(theta) gamma
/// with theta-dependent affine state/input constraints and a terminal pair
/// (K_f, X_f = {x : x' Q_f x <= 1}). Immutable after construction; share it
/// freely across threads.
class UncertainModel {
 public:
  using MatrixEval = std::function<SystemMatrices(const VectorXd& theta)>;
  using ConstraintEval = std::function<ConstraintData(const VectorXd& theta)>;
  using ThetaSampler = std::function<VectorXd(RandomStream&)>;
  using GammaSampler = std::function<VectorXd(RandomStream&)>;

  struct Spec {
    std::string name;
    ModelDimensions dims;
    MatrixEval matrix_eval;
    ConstraintEval constraint_eval;
    /// One entry per theta component. Ignored when custom_theta is set.
    std::vector<Distribution> theta_distributions;
    ThetaSampler custom_theta;
    /// Produces one gamma_t; called once per prediction step.
    GammaSampler gamma_sampler;
    MatrixXd K_f;  // m x n
    MatrixXd Q_f;  // n x n
  };

  /// Validates dimensions, the terminal pair and the constraint structure
  /// at theta = 0. Throws DimensionMismatch, CholeskyFailure, ConfigError.
  explicit UncertainModel(Spec spec);

  const std::string& name() const { return spec_.name; }
  const ModelDimensions& dims() const { return spec_.dims; }
  int n() const { return spec_.dims.n; }
  int m() const { return spec_.dims.m; }
  int m_gamma() const { return spec_.dims.m_gamma; }
  int theta_dim() const { return spec_.dims.theta_dim; }
  /// Row counts r and q of the state and input constraints.
  int state_rows() const { return state_rows_; }
  int input_rows() const { return input_rows_; }

  const MatrixXd& K_f() const { return spec_.K_f; }
  const MatrixXd& Q_f() const { return spec_.Q_f; }
  const Ellipsoid& terminal_set() const { return *terminal_; }
  const std::vector<Distribution>& theta_distributions() const { return spec_.theta_distributions; }

  VectorXd sample_theta(RandomStream& rng) const;
  /// N i.i.d. disturbances, one row per step. Requires N >= 1.
  MatrixXd sample_gamma_sequence(RandomStream& rng, int N) const;
  /// theta first, then the N disturbances, from the same stream.
  ScenarioDraw sample_draw(RandomStream& rng, int N) const;

  /// Matrices and constraint data at theta. Throws NonFiniteMatrix on
  /// NaN/inf entries, DimensionMismatch on wrong shapes and DomainError when
  /// a bound vector is not strictly positive (origin not interior).
  ModelEvaluation evaluate(const VectorXd& theta) const;

 private:
  Spec spec_;
  std::shared_ptr<const Ellipsoid> terminal_;
  int state_rows_ = 0;
  int input_rows_ = 0;
};

/// Draws omega: scenario i uses the stream (base with index = i).
Multisample draw_multisample(const UncertainModel& model, int M, int N, const StreamKey& base);

/// The two-state benchmark plant with seven uncertain parameters, a
/// disconnected non-convex disturbance set and theta-dependent box bounds.
UncertainModel example_plant();

/// Disturbance of the example plant from its five auxiliary uniforms
///   eta0 in [0,1], eta1, eta2 in [0, 0.05], eta3 in [3pi/4, 5pi/4],
///   eta4 in [-0.05, 0.05].
Eigen::Vector2d example_disturbance(const std::array<double, 5>& eta);

}  // namespace scmpc
