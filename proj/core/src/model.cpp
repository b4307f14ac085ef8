#include "scmpc/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "scmpc/errors.hpp"

namespace scmpc {
namespace {

void require_shape(const MatrixXd& M, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (M.rows() != rows || M.cols() != cols) {
    std::ostringstream os;
    os << what << " is " << M.rows() << "x" << M.cols() << ", expected " << rows << "x" << cols;
    throw DimensionMismatch(os.str());
  }
}

void require_finite(const MatrixXd& M, const char* what) {
  if (!M.allFinite()) throw NonFiniteMatrix(std::string(what) + " has non-finite entries");
}

}  // namespace

VectorXd ScenarioDraw::stacked_gamma() const {
  // gamma_seq is column-major N x m_gamma; transpose so steps are contiguous.
  const MatrixXd t = gamma_seq.transpose();
  return Eigen::Map<const VectorXd>(t.data(), t.size());
}

double Distribution::sample(RandomStream& rng) const {
  switch (kind) {
    case Kind::kUniform:
      return rng.uniform(a, b);
    case Kind::kGaussian:
      return rng.gaussian(a, b);
  }
  return 0.0;
}

UncertainModel::UncertainModel(Spec spec) : spec_(std::move(spec)) {
  const auto& d = spec_.dims;
  if (d.n < 1 || d.m < 1 || d.m_gamma < 0 || d.theta_dim < 0) {
    throw ConfigError("model dimensions must satisfy n >= 1, m >= 1, m_gamma >= 0, theta_dim >= 0");
  }
  if (!spec_.matrix_eval || !spec_.constraint_eval) {
    throw ConfigError("model needs matrix and constraint evaluators");
  }
  if (!spec_.custom_theta && static_cast<int>(spec_.theta_distributions.size()) != d.theta_dim) {
    throw DimensionMismatch("theta distribution count does not match theta_dim");
  }
  for (const auto& dist : spec_.theta_distributions) {
    if (!std::isfinite(dist.a) || !std::isfinite(dist.b)) throw ConfigError("non-finite distribution parameter");
    if (dist.kind == Distribution::Kind::kUniform && dist.b < dist.a) throw ConfigError("uniform with high < low");
    if (dist.kind == Distribution::Kind::kGaussian && dist.b < 0.0) throw ConfigError("negative standard deviation");
  }
  if (d.m_gamma > 0 && !spec_.gamma_sampler) throw ConfigError("model with m_gamma > 0 needs a gamma sampler");
  require_shape(spec_.K_f, d.m, d.n, "K_f");
  require_shape(spec_.Q_f, d.n, d.n, "Q_f");
  require_finite(spec_.K_f, "K_f");
  terminal_ = std::make_shared<const Ellipsoid>(spec_.Q_f);

  const ModelEvaluation nominal = evaluate(VectorXd::Zero(d.theta_dim));
  state_rows_ = static_cast<int>(nominal.constraints.G_x.rows());
  input_rows_ = static_cast<int>(nominal.constraints.G_u.rows());
}

VectorXd UncertainModel::sample_theta(RandomStream& rng) const {
  if (spec_.custom_theta) {
    VectorXd theta = spec_.custom_theta(rng);
    if (theta.size() != spec_.dims.theta_dim) throw DimensionMismatch("custom theta sampler returned wrong size");
    return theta;
  }
  VectorXd theta(spec_.dims.theta_dim);
  for (int k = 0; k < spec_.dims.theta_dim; ++k) theta(k) = spec_.theta_distributions[k].sample(rng);
  return theta;
}

MatrixXd UncertainModel::sample_gamma_sequence(RandomStream& rng, int N) const {
  if (N < 1) throw DomainError("horizon must be at least 1");
  MatrixXd seq(N, spec_.dims.m_gamma);
  if (spec_.dims.m_gamma == 0) return seq;
  for (int j = 0; j < N; ++j) {
    const VectorXd g = spec_.gamma_sampler(rng);
    if (g.size() != spec_.dims.m_gamma) throw DimensionMismatch("gamma sampler returned wrong size");
    seq.row(j) = g.transpose();
  }
  return seq;
}

ScenarioDraw UncertainModel::sample_draw(RandomStream& rng, int N) const {
  ScenarioDraw draw;
  draw.theta = sample_theta(rng);
  draw.gamma_seq = sample_gamma_sequence(rng, N);
  return draw;
}

ModelEvaluation UncertainModel::evaluate(const VectorXd& theta) const {
  const auto& d = spec_.dims;
  if (theta.size() != d.theta_dim) throw DimensionMismatch("theta has wrong dimension");
  if (!theta.allFinite()) throw DomainError("theta has non-finite entries");

  ModelEvaluation out{spec_.matrix_eval(theta), spec_.constraint_eval(theta)};
  const auto& mats = out.matrices;
  require_shape(mats.A, d.n, d.n, "A(theta)");
  require_shape(mats.B, d.n, d.m, "B(theta)");
  require_shape(mats.B_gamma, d.n, d.m_gamma, "B_gamma(theta)");
  require_finite(mats.A, "A(theta)");
  require_finite(mats.B, "B(theta)");
  require_finite(mats.B_gamma, "B_gamma(theta)");

  const auto& con = out.constraints;
  if (con.G_x.cols() != d.n || con.g_x.size() != con.G_x.rows()) throw DimensionMismatch("state constraint shape");
  if (con.G_u.cols() != d.m || con.g_u.size() != con.G_u.rows()) throw DimensionMismatch("input constraint shape");
  require_finite(con.G_x, "G_x(theta)");
  require_finite(con.g_x, "g_x(theta)");
  require_finite(con.G_u, "G_u(theta)");
  require_finite(con.g_u, "g_u(theta)");
  if (state_rows_ + input_rows_ > 0 &&
      (con.G_x.rows() != state_rows_ || con.G_u.rows() != input_rows_)) {
    throw DimensionMismatch("constraint row counts vary with theta");
  }
  if ((con.g_x.array() <= 0.0).any() || (con.g_u.array() <= 0.0).any()) {
    throw DomainError("constraint bounds must be strictly positive (origin interior)");
  }
  return out;
}

Multisample draw_multisample(const UncertainModel& model, int M, int N, const StreamKey& base) {
  if (M < 1) throw DomainError("multisample needs M >= 1");
  Multisample omega;
  omega.base = base;
  omega.draws.reserve(M);
  for (int i = 0; i < M; ++i) {
    StreamKey key = base;
    key.index = static_cast<std::uint64_t>(i);
    RandomStream rng(key);
    omega.draws.push_back(model.sample_draw(rng, N));
  }
  return omega;
}

Eigen::Vector2d example_disturbance(const std::array<double, 5>& eta) {
  if (eta[0] >= 0.5) {
    const double cap = (1.0 / 3.0) * (1.0 / (100.0 * (3.0 * eta[1] + 0.05)) - 0.05);
    return {eta[1], std::min(eta[2], cap)};
  }
  const double s = 0.05 * std::abs(std::sin(eta[3]));
  const double eta5 = std::max(std::min(eta[4] * std::sin(std::numbers::pi / 4.0), s), -s);
  return {0.05 * std::cos(eta[3]), eta5};
}

UncertainModel example_plant() {
  using std::numbers::pi;
  UncertainModel::Spec spec;
  spec.name = "paper-example";
  spec.dims = {2, 1, 2, 7};

  spec.matrix_eval = [](const VectorXd& th) {
    SystemMatrices s;
    s.A.resize(2, 2);
    s.A << 1.0 + th(0), 1.0 / (1.0 + th(0)),
           0.1 * std::sin(th(3)), 1.0 + th(1);
    s.B.resize(2, 1);
    s.B << 0.3 * std::atan(th(4)),
           1.0 / (1.0 + th(2));
    s.B_gamma = MatrixXd::Identity(2, 2);
    return s;
  };

  spec.constraint_eval = [](const VectorXd& th) {
    const double u_bar = 5.0 / (1.0 + th(5) * std::sin(th(6)));
    const double x1_bar = 10.0 / (1.0 - th(5) * std::sin(th(6)));
    const double x2_bar = 10.0 / (1.0 + th(5) * std::cos(th(6)));
    ConstraintData c;
    c.G_x.resize(4, 2);
    c.G_x << 1, 0,
             0, 1,
            -1, 0,
             0, -1;
    c.g_x.resize(4);
    c.g_x << x1_bar, x2_bar, x1_bar, x2_bar;
    c.G_u.resize(2, 1);
    c.G_u << 1, -1;
    c.g_u.resize(2);
    c.g_u << u_bar, u_bar;
    return c;
  };

  spec.theta_distributions = {
      Distribution::uniform(-0.1, 0.1),    Distribution::uniform(-0.1, 0.1),
      Distribution::uniform(-0.1, 0.1),    Distribution::gaussian(0.0, 1.0),
      Distribution::gaussian(0.0, 1.0),    Distribution::uniform(-0.05, 0.05),
      Distribution::gaussian(0.0, 1.0),
  };

  spec.gamma_sampler = [](RandomStream& rng) {
    std::array<double, 5> eta{};
    eta[0] = rng.uniform(0.0, 1.0);
    eta[1] = rng.uniform(0.0, 0.05);
    eta[2] = rng.uniform(0.0, 0.05);
    eta[3] = rng.uniform(0.75 * pi, 1.25 * pi);
    eta[4] = rng.uniform(-0.05, 0.05);
    const Eigen::Vector2d g = example_disturbance(eta);
    return VectorXd(g);
  };

  spec.K_f.resize(1, 2);
  spec.K_f << -0.4686, -1.4221;
  spec.Q_f.resize(2, 2);
  spec.Q_f << 0.0539, 0.0724,
              0.0724, 0.1724;
  return UncertainModel(std::move(spec));
}

}  // namespace scmpc
