#include "scmpc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include "scmpc/detail/soc.hpp"
#include "scmpc/errors.hpp"

namespace scmpc {

const char* to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::kSolved:
      return "solved";
    case SolverStatus::kMaxIters:
      return "max_iters";
    case SolverStatus::kNumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

namespace detail {

using Eigen::Ref;
using Eigen::VectorXd;

double soc_norm_j(const Ref<const VectorXd>& u) {
  const double r = u.tail(u.size() - 1).norm();
  const double d = (u(0) - r) * (u(0) + r);
  return d > 0.0 ? std::sqrt(d) : 0.0;
}

SocScaling soc_nt_scaling(const Ref<const VectorXd>& s, const Ref<const VectorXd>& z) {
  const double sn = soc_norm_j(s);
  const double zn = soc_norm_j(z);
  if (!(sn > 0.0 && zn > 0.0) || s(0) <= 0.0 || z(0) <= 0.0) {
    throw DomainError("scaling point is not interior to the cone");
  }
  const Eigen::Index k = s.size();
  const VectorXd sb = s / sn;
  const VectorXd zb = z / zn;
  const double gamma = std::sqrt((1.0 + sb.dot(zb)) / 2.0);
  // Scaling point wbar = (sb + J zb) / (2 gamma); v = (wbar + e) / sqrt(2 (wbar_0 + 1)).
  VectorXd wbar(k);
  wbar(0) = sb(0) + zb(0);
  wbar.tail(k - 1) = sb.tail(k - 1) - zb.tail(k - 1);
  wbar /= 2.0 * gamma;
  SocScaling w;
  w.beta = std::sqrt(sn / zn);
  w.v = wbar;
  w.v(0) += 1.0;
  w.v /= std::sqrt(2.0 * (wbar(0) + 1.0));
  return w;
}

void soc_apply_w(const SocScaling& w, const Ref<const VectorXd>& v, Ref<VectorXd> out) {
  const Eigen::Index k = v.size();
  const double a = 2.0 * w.v.dot(v);
  out(0) = w.beta * (a * w.v(0) - v(0));
  out.tail(k - 1) = w.beta * (a * w.v.tail(k - 1) + v.tail(k - 1));
}

void soc_apply_winv(const SocScaling& w, const Ref<const VectorXd>& v, Ref<VectorXd> out) {
  const Eigen::Index k = v.size();
  // J v = (v_0, -v_1)
  const double a = 2.0 * (w.v(0) * v(0) - w.v.tail(k - 1).dot(v.tail(k - 1)));
  out(0) = (a * w.v(0) - v(0)) / w.beta;
  out.tail(k - 1) = (v.tail(k - 1) - a * w.v.tail(k - 1)) / w.beta;
}

double soc_max_step(const Ref<const VectorXd>& u, const Ref<const VectorXd>& d) {
  const Eigen::Index k = u.size();
  const double dn = d.tail(k - 1).norm();
  if (d(0) >= dn) return std::numeric_limits<double>::infinity();
  const double un = u.tail(k - 1).norm();
  const double a = (d(0) - dn) * (d(0) + dn);
  const double b = u(0) * d(0) - u.tail(k - 1).dot(d.tail(k - 1));
  const double c = std::max((u(0) - un) * (u(0) + un), 0.0);
  const double denom = -b + std::sqrt(std::max(b * b - a * c, 0.0));
  if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
  return c / denom;
}

void soc_jordan_product(const Ref<const VectorXd>& u, const Ref<const VectorXd>& v, Ref<VectorXd> out) {
  const Eigen::Index k = u.size();
  const double head = u.dot(v);
  out.tail(k - 1) = u(0) * v.tail(k - 1) + v(0) * u.tail(k - 1);
  out(0) = head;
}

void soc_jordan_solve(const Ref<const VectorXd>& lambda, const Ref<const VectorXd>& b, Ref<VectorXd> out) {
  const Eigen::Index k = lambda.size();
  const double ln = lambda.tail(k - 1).norm();
  const double det = (lambda(0) - ln) * (lambda(0) + ln);
  const double x0 = (lambda(0) * b(0) - lambda.tail(k - 1).dot(b.tail(k - 1))) / det;
  out.tail(k - 1) = (b.tail(k - 1) - x0 * lambda.tail(k - 1)) / lambda(0);
  out(0) = x0;
}

}  // namespace detail

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

constexpr int kRuizPasses = 15;
constexpr double kRuizMin = 1e-4;
constexpr double kRuizMax = 1e4;
constexpr double kStaticReg = 1e-10;
constexpr int kMaxRefine = 10;
constexpr double kRefineTol = 1e-10;
// A refined solve with a larger residual than this (relative) is rejected and
// the matrix refactored with more regularization.
constexpr double kSolveAccept = 1e-8;
constexpr double kMaxReg = 1e-4;
constexpr double kStepFraction = 0.99;
constexpr double kTinyStep = 1e-10;
constexpr int kTinyStepLimit = 5;
constexpr int kStallWindow = 50;

struct Span {
  int row0 = 0;
  int size = 0;
};

class InteriorPoint {
 public:
  InteriorPoint(const ConicProgram& program, const SolverSettings& settings) : settings_(settings) {
    program.validate();
    n_ = program.num_variables();
    m_ = program.num_rows();
    if (m_ == 0) throw ConfigError("conic program has no constraints");
    for (int k = 0; k < program.A.outerSize(); ++k) {
      for (SpMat::InnerIterator it(program.A, k); it; ++it) {
        if (!std::isfinite(it.value())) throw NonFiniteMatrix("non-finite entry in A");
      }
    }
    c_norm_ = program.c.norm();
    h_norm_ = program.b.norm();
    lower(program);
    if (settings_.scaling) equilibrate();
    build_kkt();
    allocate();
  }

  SolverResult run();

 private:
  void lower(const ConicProgram& program);
  void equilibrate();
  void build_kkt();
  void allocate();

  void apply_w(const VectorXd& v, VectorXd& out) const;
  void apply_winv(const VectorXd& v, VectorXd& out) const;
  void jordan_product(const VectorXd& u, const VectorXd& v, VectorXd& out) const;
  void jordan_solve(const VectorXd& b, VectorXd& out) const;
  double max_step(const VectorXd& u, const VectorXd& d) const;
  double min_eig(const VectorXd& u) const;
  void add_identity(VectorXd& u, double t) const;

  void identity_scaling();
  bool update_scaling();
  bool factor(double delta0);
  void kkt_multiply(const VectorXd& v, VectorXd& out);
  void ldl_solve(const VectorXd& b, VectorXd& out);
  bool solve_kkt(const VectorXd& bx, const VectorXd& bz, VectorXd& dx, VectorXd& dz);
  bool newton(const VectorXd& bx, const VectorXd& bz, const VectorXd& bs, VectorXd& dx, VectorXd& dz,
              VectorXd& ds);
  SolverResult finish(SolverStatus status, int iters, const SolverResiduals& res, double pcost, double dcost);

  SolverSettings settings_;
  int n_ = 0;
  int m_ = 0;
  double c_norm_ = 0.0;
  double h_norm_ = 0.0;

  // Internal problem: min c'x  s.t.  G x + s = h,  s in orthants x SOCs.
  SpMat G_;
  VectorXd c_;
  VectorXd h_;
  VectorXd D_;  // x = D x~
  VectorXd E_;  // s~ = E s, z~ = E^-1 z
  std::vector<Span> orthant_;
  std::vector<Span> socs_;
  std::vector<int> rotated_rows_;  // first row of each rotated block
  int degree_ = 0;

  SpMat K_;
  std::vector<int> x_diag_;
  std::vector<int> orth_diag_;
  std::vector<std::vector<int>> soc_pos_;
  double delta_ = kStaticReg;  // regularization of the current factor
  std::vector<int> perm_;  // position of each (x, z) unknown in K_
  Eigen::SimplicialLDLT<SpMat, Eigen::Upper, Eigen::NaturalOrdering<int>> ldlt_;

  VectorXd w_orth_;  // sqrt(s/z) on orthant rows
  VectorXd soc_v_;  // NT vector v of each second-order block, stored on its rows
  std::vector<double> soc_beta_;
  VectorXd lambda_;

  VectorXd x_, s_, z_;
  // scratch
  VectorXd t1_, t2_, rx_, rz_, rhs_, sol_, corr_, prhs_, psol_, t3_, psi_;
};

void InteriorPoint::lower(const ConicProgram& program) {
  // Rotated blocks become standard second-order cones through the symmetric
  // orthogonal map T = [1 1; 1 -1]/sqrt(2) on their first two rows.
  std::vector<int> role(m_, 0);  // 1: first rotated row, 2: second
  int row = 0;
  for (const auto& cone : program.cones) {
    switch (cone.kind) {
      case ConeKind::kNonnegative:
        orthant_.push_back({row, cone.size});
        degree_ += cone.size;
        break;
      case ConeKind::kSecondOrder:
        socs_.push_back({row, cone.size});
        degree_ += 1;
        break;
      case ConeKind::kRotatedSecondOrder:
        socs_.push_back({row, cone.size});
        rotated_rows_.push_back(row);
        role[row] = 1;
        role[row + 1] = 2;
        degree_ += 1;
        break;
    }
    row += cone.size;
  }

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(program.A.nonZeros()) * 2);
  for (int k = 0; k < program.A.outerSize(); ++k) {
    for (SpMat::InnerIterator it(program.A, k); it; ++it) {
      const int i = static_cast<int>(it.row());
      const double v = it.value();
      if (v == 0.0) continue;
      if (role[i] == 0) {
        trips.emplace_back(i, it.col(), v);
      } else {
        const int r0 = role[i] == 1 ? i : i - 1;
        trips.emplace_back(r0, it.col(), v * kInvSqrt2);
        trips.emplace_back(r0 + 1, it.col(), role[i] == 1 ? v * kInvSqrt2 : -v * kInvSqrt2);
      }
    }
  }
  G_.resize(m_, n_);
  G_.setFromTriplets(trips.begin(), trips.end());
  G_.prune(0.0);
  G_.makeCompressed();

  h_ = program.b;
  for (int r0 : rotated_rows_) {
    const double a = h_(r0);
    const double b = h_(r0 + 1);
    h_(r0) = (a + b) * kInvSqrt2;
    h_(r0 + 1) = (a - b) * kInvSqrt2;
  }
  c_ = program.c;
  D_ = VectorXd::Ones(n_);
  E_ = VectorXd::Ones(m_);
}

void InteriorPoint::equilibrate() {
  // Ruiz: repeatedly divide rows and columns by the square root of their
  // largest entry. Rows of a second-order cone share one factor so the
  // scaled slack stays in the same cone.
  VectorXd col_max(n_);
  VectorXd row_max(m_);
  for (int pass = 0; pass < kRuizPasses; ++pass) {
    col_max.setZero();
    row_max.setZero();
    for (int j = 0; j < G_.outerSize(); ++j) {
      for (SpMat::InnerIterator it(G_, j); it; ++it) {
        const double a = std::abs(E_(it.row()) * it.value() * D_(j));
        col_max(j) = std::max(col_max(j), a);
        row_max(it.row()) = std::max(row_max(it.row()), a);
      }
    }
    for (const auto& soc : socs_) {
      const double mx = row_max.segment(soc.row0, soc.size).maxCoeff();
      row_max.segment(soc.row0, soc.size).setConstant(mx);
    }
    double spread = 0.0;
    for (int j = 0; j < n_; ++j) {
      if (col_max(j) > 0.0) {
        D_(j) = std::clamp(D_(j) / std::sqrt(col_max(j)), kRuizMin, kRuizMax);
        spread = std::max(spread, std::abs(1.0 - col_max(j)));
      }
    }
    for (int i = 0; i < m_; ++i) {
      if (row_max(i) > 0.0) {
        E_(i) = std::clamp(E_(i) / std::sqrt(row_max(i)), kRuizMin, kRuizMax);
        spread = std::max(spread, std::abs(1.0 - row_max(i)));
      }
    }
    if (spread < 1e-3) break;
  }
  for (int j = 0; j < G_.outerSize(); ++j) {
    for (SpMat::InnerIterator it(G_, j); it; ++it) it.valueRef() *= E_(it.row()) * D_(j);
  }
  c_ = c_.cwiseProduct(D_);
  h_ = h_.cwiseProduct(E_);
}

void InteriorPoint::build_kkt() {
  // Quasi-definite matrix [dI G'; G -(W^2 + dI)] over (x, z); second-order
  // blocks of W^2 are dense. The fill-reducing ordering is computed once and
  // the matrix is stored already permuted (upper triangle) so that each
  // factorization works in place.
  const int dim = n_ + m_;
  std::vector<std::pair<int, int>> entries;  // (row, col), row >= col
  entries.reserve(static_cast<std::size_t>(dim + G_.nonZeros()));
  for (int j = 0; j < n_; ++j) entries.emplace_back(j, j);
  for (int j = 0; j < G_.outerSize(); ++j) {
    for (SpMat::InnerIterator it(G_, j); it; ++it) entries.emplace_back(n_ + it.row(), j);
  }
  for (const auto& sp : orthant_) {
    for (int i = sp.row0; i < sp.row0 + sp.size; ++i) entries.emplace_back(n_ + i, n_ + i);
  }
  for (const auto& sp : socs_) {
    for (int q = 0; q < sp.size; ++q) {
      for (int p = q; p < sp.size; ++p) entries.emplace_back(n_ + sp.row0 + p, n_ + sp.row0 + q);
    }
  }

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(entries.size() * 2);
  for (const auto& [r, c] : entries) {
    trips.emplace_back(r, c, 1.0);
    if (r != c) trips.emplace_back(c, r, 1.0);
  }
  SpMat full(dim, dim);
  full.setFromTriplets(trips.begin(), trips.end());
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> pinv;
  Eigen::AMDOrdering<int>()(full, pinv);
  // AMD returns the inverse permutation: new index of i is perm_[i].
  perm_.resize(dim);
  const auto& inv = pinv.indices();
  for (int k = 0; k < dim; ++k) perm_[inv[k]] = k;

  trips.clear();
  for (const auto& [r, c] : entries) {
    const int a = perm_[r];
    const int b = perm_[c];
    trips.emplace_back(std::min(a, b), std::max(a, b), 0.0);
  }
  K_.resize(dim, dim);
  K_.setFromTriplets(trips.begin(), trips.end());
  K_.makeCompressed();

  auto slot = [&](int row, int col) {
    int a = perm_[row];
    int b = perm_[col];
    if (a > b) std::swap(a, b);
    const int* begin = K_.innerIndexPtr() + K_.outerIndexPtr()[b];
    const int* end = K_.innerIndexPtr() + K_.outerIndexPtr()[b + 1];
    return static_cast<int>(std::lower_bound(begin, end, a) - K_.innerIndexPtr());
  };
  for (int j = 0; j < G_.outerSize(); ++j) {
    for (SpMat::InnerIterator it(G_, j); it; ++it) K_.valuePtr()[slot(n_ + it.row(), j)] = it.value();
  }
  x_diag_.resize(n_);
  for (int j = 0; j < n_; ++j) x_diag_[j] = slot(j, j);
  orth_diag_.assign(m_, -1);
  for (const auto& sp : orthant_) {
    for (int i = sp.row0; i < sp.row0 + sp.size; ++i) orth_diag_[i] = slot(n_ + i, n_ + i);
  }
  soc_pos_.resize(socs_.size());
  for (std::size_t k = 0; k < socs_.size(); ++k) {
    const auto& sp = socs_[k];
    for (int q = 0; q < sp.size; ++q) {
      for (int p = q; p < sp.size; ++p) soc_pos_[k].push_back(slot(n_ + sp.row0 + p, n_ + sp.row0 + q));
    }
  }
  ldlt_.analyzePattern(K_);
}

void InteriorPoint::allocate() {
  w_orth_ = VectorXd::Ones(m_);
  soc_v_ = VectorXd::Zero(m_);
  soc_beta_.assign(socs_.size(), 1.0);
  lambda_.resize(m_);
  for (auto* v : {&s_, &z_, &t1_, &t2_, &rz_}) v->resize(m_);
  for (auto* v : {&x_, &rx_}) v->resize(n_);
  rhs_.resize(n_ + m_);
  sol_.resize(n_ + m_);
  corr_.resize(n_ + m_);
  prhs_.resize(n_ + m_);
  psol_.resize(n_ + m_);
  t3_.resize(n_ + m_);
  psi_.resize(m_);
}

void InteriorPoint::apply_w(const VectorXd& v, VectorXd& out) const {
  const double* pv = v.data();
  double* po = out.data();
  for (const auto& sp : orthant_) {
    for (int i = sp.row0; i < sp.row0 + sp.size; ++i) po[i] = w_orth_[i] * pv[i];
  }
  for (std::size_t k = 0; k < socs_.size(); ++k) {
    // beta (2 v v' - J)
    const int r0 = socs_[k].row0;
    const int size = socs_[k].size;
    const double* sv = soc_v_.data() + r0;
    const double beta = soc_beta_[k];
    double a = 0.0;
    for (int i = 0; i < size; ++i) a += sv[i] * pv[r0 + i];
    a *= 2.0;
    po[r0] = beta * (a * sv[0] - pv[r0]);
    for (int i = 1; i < size; ++i) po[r0 + i] = beta * (a * sv[i] + pv[r0 + i]);
  }
}

void InteriorPoint::apply_winv(const VectorXd& v, VectorXd& out) const {
  const double* pv = v.data();
  double* po = out.data();
  for (const auto& sp : orthant_) {
    for (int i = sp.row0; i < sp.row0 + sp.size; ++i) po[i] = pv[i] / w_orth_[i];
  }
  for (std::size_t k = 0; k < socs_.size(); ++k) {
    // (2 Jv v'J - J) / beta
    const int r0 = socs_[k].row0;
    const int size = socs_[k].size;
    const double* sv = soc_v_.data() + r0;
    const double beta = soc_beta_[k];
    double a = sv[0] * pv[r0];
    for (int i = 1; i < size; ++i) a -= sv[i] * pv[r0 + i];
    a *= 2.0;
    po[r0] = (a * sv[0] - pv[r0]) / beta;
    for (int i = 1; i < size; ++i) po[r0 + i] = (pv[r0 + i] - a * sv[i]) / beta;
  }
}

void InteriorPoint::jordan_product(const VectorXd& u, const VectorXd& v, VectorXd& out) const {
  for (const auto& sp : orthant_) {
    out.segment(sp.row0, sp.size) = u.segment(sp.row0, sp.size).cwiseProduct(v.segment(sp.row0, sp.size));
  }
  for (const auto& sp : socs_) {
    detail::soc_jordan_product(u.segment(sp.row0, sp.size), v.segment(sp.row0, sp.size),
                               out.segment(sp.row0, sp.size));
  }
}

void InteriorPoint::jordan_solve(const VectorXd& b, VectorXd& out) const {
  for (const auto& sp : orthant_) {
    out.segment(sp.row0, sp.size) = b.segment(sp.row0, sp.size).cwiseQuotient(lambda_.segment(sp.row0, sp.size));
  }
  for (const auto& sp : socs_) {
    detail::soc_jordan_solve(lambda_.segment(sp.row0, sp.size), b.segment(sp.row0, sp.size),
                             out.segment(sp.row0, sp.size));
  }
}

double InteriorPoint::max_step(const VectorXd& u, const VectorXd& d) const {
  double t = kInf;
  const double* pu = u.data();
  const double* pd = d.data();
  for (const auto& sp : orthant_) {
    for (int i = sp.row0; i < sp.row0 + sp.size; ++i) {
      if (pd[i] < 0.0) t = std::min(t, -pu[i] / pd[i]);
    }
  }
  for (const auto& sp : socs_) {
    const double* cu = pu + sp.row0;
    const double* cd = pd + sp.row0;
    double dn2 = 0.0;
    double un2 = 0.0;
    double ud = 0.0;
    for (int i = 1; i < sp.size; ++i) {
      dn2 += cd[i] * cd[i];
      un2 += cu[i] * cu[i];
      ud += cu[i] * cd[i];
    }
    const double dn = std::sqrt(dn2);
    if (cd[0] >= dn) continue;
    const double un = std::sqrt(un2);
    const double a = (cd[0] - dn) * (cd[0] + dn);
    const double b = cu[0] * cd[0] - ud;
    const double c = std::max((cu[0] - un) * (cu[0] + un), 0.0);
    const double denom = -b + std::sqrt(std::max(b * b - a * c, 0.0));
    if (denom > 0.0) t = std::min(t, c / denom);
  }
  return t;
}

double InteriorPoint::min_eig(const VectorXd& u) const {
  double e = kInf;
  for (const auto& sp : orthant_) e = std::min(e, u.segment(sp.row0, sp.size).minCoeff());
  for (const auto& sp : socs_) e = std::min(e, u(sp.row0) - u.segment(sp.row0 + 1, sp.size - 1).norm());
  return e;
}

void InteriorPoint::add_identity(VectorXd& u, double t) const {
  for (const auto& sp : orthant_) u.segment(sp.row0, sp.size).array() += t;
  for (const auto& sp : socs_) u(sp.row0) += t;
}

void InteriorPoint::identity_scaling() {
  w_orth_.setOnes();
  soc_v_.setZero();
  for (std::size_t k = 0; k < socs_.size(); ++k) {
    soc_beta_[k] = 1.0;
    soc_v_(socs_[k].row0) = 1.0;
  }
}

bool InteriorPoint::update_scaling() {
  const double* ps = s_.data();
  const double* pz = z_.data();
  for (const auto& sp : orthant_) {
    for (int i = sp.row0; i < sp.row0 + sp.size; ++i) {
      if (!(ps[i] > 0.0 && pz[i] > 0.0)) return false;
      w_orth_[i] = std::sqrt(ps[i] / pz[i]);
      lambda_[i] = std::sqrt(ps[i] * pz[i]);
    }
  }
  for (std::size_t k = 0; k < socs_.size(); ++k) {
    // Same construction as detail::soc_nt_scaling, without temporaries.
    const int r0 = socs_[k].row0;
    const int size = socs_[k].size;
    const double* cs = ps + r0;
    const double* cz = pz + r0;
    double s2 = 0.0;
    double z2 = 0.0;
    double sz = 0.0;
    for (int i = 1; i < size; ++i) {
      s2 += cs[i] * cs[i];
      z2 += cz[i] * cz[i];
      sz += cs[i] * cz[i];
    }
    const double sr = std::sqrt(s2);
    const double zr = std::sqrt(z2);
    const double sd = (cs[0] - sr) * (cs[0] + sr);
    const double zd = (cz[0] - zr) * (cz[0] + zr);
    if (!(cs[0] > 0.0 && cz[0] > 0.0 && sd > 0.0 && zd > 0.0)) return false;
    const double sn = std::sqrt(sd);
    const double zn = std::sqrt(zd);
    const double dot = (cs[0] * cz[0] + sz) / (sn * zn);
    const double gamma = std::sqrt((1.0 + dot) / 2.0);
    double* v = soc_v_.data() + r0;
    const double w0 = (cs[0] / sn + cz[0] / zn) / (2.0 * gamma);
    const double f = 1.0 / std::sqrt(2.0 * (w0 + 1.0));
    v[0] = (w0 + 1.0) * f;
    for (int i = 1; i < size; ++i) v[i] = (cs[i] / sn - cz[i] / zn) / (2.0 * gamma) * f;
    const double beta = std::sqrt(sn / zn);
    soc_beta_[k] = beta;
    // lambda = W z
    double a = 0.0;
    for (int i = 0; i < size; ++i) a += v[i] * cz[i];
    a *= 2.0;
    double* lam = lambda_.data() + r0;
    lam[0] = beta * (a * v[0] - cz[0]);
    for (int i = 1; i < size; ++i) lam[i] = beta * (a * v[i] + cz[i]);
  }
  return lambda_.allFinite();
}

bool InteriorPoint::factor(double delta0) {
  double* values = K_.valuePtr();
  for (double delta = delta0; delta <= kMaxReg; delta *= 100.0) {
    delta_ = delta;
    for (int j = 0; j < n_; ++j) values[x_diag_[j]] = delta;
    for (const auto& sp : orthant_) {
      for (int i = sp.row0; i < sp.row0 + sp.size; ++i) values[orth_diag_[i]] = -(w_orth_(i) * w_orth_(i) + delta);
    }
    for (std::size_t k = 0; k < socs_.size(); ++k) {
      // W^2 = beta^2 (2vv' - J)^2 = beta^2 (4 (v'v) vv' - 2 v (Jv)' - 2 (Jv) v' + I)
      const int size = socs_[k].size;
      const double* sv = soc_v_.data() + socs_[k].row0;
      const double b2 = soc_beta_[k] * soc_beta_[k];
      double vv = 0.0;
      for (int i = 0; i < size; ++i) vv += sv[i] * sv[i];
      std::size_t idx = 0;
      for (int q = 0; q < size; ++q) {
        const double jq = q == 0 ? sv[0] : -sv[q];
        for (int p = q; p < size; ++p) {
          const double jp = p == 0 ? sv[0] : -sv[p];
          const double w2 = b2 * (4.0 * vv * sv[p] * sv[q] - 2.0 * sv[p] * jq - 2.0 * jp * sv[q] + (p == q ? 1.0 : 0.0));
          values[soc_pos_[k][idx++]] = -(w2 + (p == q ? delta : 0.0));
        }
      }
    }
    ldlt_.factorize(K_);
    if (ldlt_.info() != Eigen::Success) continue;
    // Near the cone boundary the dense W^2 blocks are close to rank one and a
    // few pivots may come out with the wrong sign; the factor is still a
    // usable preconditioner for the refinement in solve_kkt.
    const auto& d = ldlt_.vectorD();
    if (d.allFinite() && (d.array() != 0.0).all()) return true;
  }
  return false;
}

void InteriorPoint::kkt_multiply(const VectorXd& v, VectorXd& out) {
  // Unregularized [0 G'; G -W^2] v
  const auto vx = v.head(n_);
  const auto vz = v.tail(m_);
  out.head(n_).noalias() = G_.transpose() * vz;
  t1_ = vz;
  apply_w(t1_, t2_);
  apply_w(t2_, t1_);
  out.tail(m_).noalias() = G_ * vx;
  out.tail(m_) -= t1_;
}

void InteriorPoint::ldl_solve(const VectorXd& b, VectorXd& out) {
  const int dim = n_ + m_;
  for (int i = 0; i < dim; ++i) prhs_[perm_[i]] = b[i];
  psol_ = ldlt_.solve(prhs_);
  for (int i = 0; i < dim; ++i) out[i] = psol_[perm_[i]];
}

bool InteriorPoint::solve_kkt(const VectorXd& bx, const VectorXd& bz, VectorXd& dx, VectorXd& dz) {
  rhs_.head(n_) = bx;
  rhs_.tail(m_) = bz;
  ldl_solve(rhs_, sol_);
  const double scale = 1.0 + rhs_.lpNorm<Eigen::Infinity>();
  double prev = kInf;
  double err = kInf;
  for (int k = 0; k <= kMaxRefine; ++k) {
    kkt_multiply(sol_, corr_);
    corr_ = rhs_ - corr_;
    err = corr_.lpNorm<Eigen::Infinity>();
    if (k == kMaxRefine || !(err > kRefineTol * scale) || !(err < 0.5 * prev)) break;
    prev = err;
    ldl_solve(corr_, t3_);
    sol_ += t3_;
  }
  dx = sol_.head(n_);
  dz = sol_.tail(m_);
  return err <= kSolveAccept * scale;
}

bool InteriorPoint::newton(const VectorXd& bx, const VectorXd& bz, const VectorXd& bs, VectorXd& dx, VectorXd& dz,
                           VectorXd& ds) {
  // lambda o (W^-1 ds + W dz) = bs,  G dx + ds = bz,  G' dz = bx
  jordan_solve(bs, psi_);
  apply_w(psi_, t1_);
  t2_ = bz - t1_;
  const bool ok = solve_kkt(bx, t2_, dx, dz);
  apply_w(dz, t1_);
  t2_ = psi_ - t1_;
  apply_w(t2_, ds);
  return ok;
}

SolverResult InteriorPoint::finish(SolverStatus status, int iters, const SolverResiduals& res, double pcost,
                                   double dcost) {
  SolverResult out;
  out.status = status;
  out.iters = iters;
  out.residuals = res;
  out.primal_objective = pcost;
  out.dual_objective = dcost;
  out.x = x_.cwiseProduct(D_);
  out.s = s_.cwiseQuotient(E_);
  out.y = z_.cwiseProduct(E_);
  for (int r0 : rotated_rows_) {
    for (VectorXd* v : {&out.s, &out.y}) {
      const double a = (*v)(r0);
      const double b = (*v)(r0 + 1);
      (*v)(r0) = (a + b) * kInvSqrt2;
      (*v)(r0 + 1) = (a - b) * kInvSqrt2;
    }
  }
  return out;
}

SolverResult InteriorPoint::run() {
  SolverResiduals res;
  identity_scaling();
  if (!factor(kStaticReg)) return finish(SolverStatus::kNumericalFailure, 0, res, 0.0, 0.0);

  // Starting point: least-squares primal slack and least-norm dual, then
  // shifted along the cone identity into the interior.
  VectorXd zero_n = VectorXd::Zero(n_);
  VectorXd zero_m = VectorXd::Zero(m_);
  VectorXd dz(m_), dx(n_), ds(m_);
  solve_kkt(zero_n, h_, x_, dz);
  s_ = -dz;
  solve_kkt(-c_, zero_m, dx, z_);
  const double ts = min_eig(s_);
  const double tz = min_eig(z_);
  if (ts <= 1e-8 * std::max(s_.norm(), 1.0)) add_identity(s_, 1.0 - ts);
  if (tz <= 1e-8 * std::max(z_.norm(), 1.0)) add_identity(z_, 1.0 - tz);

  const VectorXd e = [&] {
    VectorXd v = VectorXd::Zero(m_);
    add_identity(v, 1.0);
    return v;
  }();

  VectorXd rx(n_), rz(m_), bs(m_), lam_sq(m_);
  VectorXd dx_a(n_), dz_a(m_), ds_a(m_), t_a(m_), t_b(m_), corr(m_);
  int tiny_steps = 0;
  double best_merit = kInf;
  int best_iter = 0;

  for (int iter = 0;; ++iter) {
    rx.noalias() = G_.transpose() * z_;
    rx += c_;
    rz.noalias() = G_ * x_;
    rz += s_ - h_;
    const double pcost = c_.dot(x_);
    const double dcost = -h_.dot(z_);
    const double gap = s_.dot(z_);
    double relgap = kInf;
    if (pcost < 0.0) {
      relgap = gap / -pcost;
    } else if (dcost > 0.0) {
      relgap = gap / dcost;
    }
    res.primal = rz.cwiseQuotient(E_).norm() / std::max(1.0, h_norm_);
    res.dual = rx.cwiseQuotient(D_).norm() / std::max(1.0, c_norm_);
    res.gap = std::min(gap, relgap);

    if (!std::isfinite(res.primal) || !std::isfinite(res.dual) || !std::isfinite(gap)) {
      return finish(SolverStatus::kNumericalFailure, iter, res, pcost, dcost);
    }
    if (res.primal <= settings_.eps_primal && res.dual <= settings_.eps_dual && res.gap <= settings_.eps_gap) {
      return finish(SolverStatus::kSolved, iter, res, pcost, dcost);
    }
    if (iter >= settings_.max_iters) return finish(SolverStatus::kMaxIters, iter, res, pcost, dcost);

    const double merit = std::max({res.primal, res.dual, res.gap});
    if (merit < 0.5 * best_merit) {
      best_merit = merit;
      best_iter = iter;
    } else if (iter - best_iter > kStallWindow) {
      return finish(SolverStatus::kNumericalFailure, iter, res, pcost, dcost);
    }

    if (!update_scaling()) return finish(SolverStatus::kNumericalFailure, iter, res, pcost, dcost);
    const double mu = gap / degree_;
    jordan_product(lambda_, lambda_, lam_sq);
    rx = -rx;
    rz = -rz;

    // Predictor, then corrector with the second-order term of the affine
    // direction. An inaccurate solve means the factor is unusable; redo both
    // with more regularization.
    bool accurate = false;
    for (double delta = kStaticReg; !accurate && delta <= kMaxReg; delta = delta_ * 100.0) {
      if (!factor(delta)) break;
      bs = -lam_sq;
      if (!newton(rx, rz, bs, dx_a, dz_a, ds_a)) continue;
      const double alpha_a = std::min({1.0, max_step(s_, ds_a), max_step(z_, dz_a)});
      const double sigma =
          std::pow(std::clamp((s_ + alpha_a * ds_a).dot(z_ + alpha_a * dz_a) / gap, 0.0, 1.0), 3.0);
      apply_winv(ds_a, t_a);
      apply_w(dz_a, t_b);
      jordan_product(t_a, t_b, corr);
      bs = -lam_sq - corr + (sigma * mu) * e;
      accurate = newton(rx, rz, bs, dx, dz, ds);
    }
    if (!accurate) return finish(SolverStatus::kNumericalFailure, iter, res, pcost, dcost);
    const double alpha = std::min(1.0, kStepFraction * std::min(max_step(s_, ds), max_step(z_, dz)));
    if (!std::isfinite(alpha) || !dx.allFinite() || !dz.allFinite() || !ds.allFinite()) {
      return finish(SolverStatus::kNumericalFailure, iter, res, pcost, dcost);
    }
    tiny_steps = alpha < kTinyStep ? tiny_steps + 1 : 0;
    if (tiny_steps >= kTinyStepLimit) return finish(SolverStatus::kNumericalFailure, iter, res, pcost, dcost);
    x_ += alpha * dx;
    s_ += alpha * ds;
    z_ += alpha * dz;
  }
}

}  // namespace

SolverResult solve(const ConicProgram& program, const SolverSettings& settings) {
  if (settings.max_iters < 0) throw ConfigError("max_iters must be non-negative");
  InteriorPoint ipm(program, settings);
  return ipm.run();
}

}  // namespace scmpc
