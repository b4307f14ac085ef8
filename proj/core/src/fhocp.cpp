#include "scmpc/fhocp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "scmpc/errors.hpp"

namespace scmpc {

MatrixXd FhocpConfig::weight(int m) const {
  return Lambda.size() == 0 ? MatrixXd::Identity(m, m) : Lambda;
}

void FhocpConfig::validate(int m) const {
  if (N < 1) throw ConfigError("horizon N must be at least 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be positive and finite");
  const MatrixXd W = weight(m);
  if (W.rows() != m || W.cols() != m) throw DimensionMismatch("Lambda must be m x m");
  if (!W.allFinite() || (W - W.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + W.cwiseAbs().maxCoeff())) {
    throw ConfigError("Lambda must be symmetric");
  }
  Eigen::LLT<MatrixXd> llt(W);
  if (llt.info() != Eigen::Success) throw ConfigError("Lambda must be positive definite");
}

VectorXd ScenarioData::state(int j, const VectorXd& V) const {
  if (j == 0) return free.col(0);
  return free.col(j) + ops.Phi[j - 1] * V;
}

MatrixXd ScenarioData::states(const VectorXd& V) const {
  // x_{j+1} - free_{j+1} = A_cl (x_j - free_j) + B v_j; B is the first block of Phi_1.
  const int N = ops.horizon();
  const auto n = free.rows();
  const auto m = V.size() / N;
  const MatrixXd& A_cl = ops.powers[1];
  const auto B = ops.Phi[0].leftCols(m);
  MatrixXd X(n, N + 1);
  X.col(0).setZero();
  for (int j = 0; j < N; ++j) X.col(j + 1).noalias() = A_cl * X.col(j) + B * V.segment(j * m, m);
  X += free;
  return X;
}

ScenarioData prepare_scenario(const VectorXd& x_t, const ScenarioDraw& draw, const UncertainModel& model, int N) {
  if (x_t.size() != model.n()) throw DimensionMismatch("x_t has wrong dimension");
  if (!x_t.allFinite()) throw DomainError("x_t has non-finite entries");
  if (draw.horizon() < N) throw DimensionMismatch("scenario draw is shorter than the horizon");
  const ModelEvaluation ev = model.evaluate(draw.theta);
  const auto& mats = ev.matrices;
  ScenarioData sc;
  sc.ops = build_operators(closed_loop(mats.A, mats.B, model.K_f()), mats.B, mats.B_gamma, N);
  sc.constraints = ev.constraints;
  const MatrixXd gamma = draw.gamma_seq.topRows(N);
  sc.free.resize(model.n(), N + 1);
  // Free response by recursion: x_{j+1} = A_cl x_j + B_gamma gamma_j.
  const MatrixXd& A_cl = sc.ops.powers[1];
  sc.free.col(0) = x_t;
  for (int j = 0; j < N; ++j) sc.free.col(j + 1) = A_cl * sc.free.col(j) + mats.B_gamma * gamma.row(j).transpose();
  return sc;
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// Appends rows to the program under construction, tracking the cone list.
struct ProgramBuilder {
  Triplets A;
  std::vector<double> b;
  std::vector<ConeBlock> cones;

  int row() const { return static_cast<int>(b.size()); }
  int add_row(double rhs) {
    b.push_back(rhs);
    return row() - 1;
  }
  void coef(int r, int col, double v) {
    if (v != 0.0) A.emplace_back(r, col, v);
  }
  void close_cone(ConeKind kind, int first_row) {
    const int size = row() - first_row;
    if (kind == ConeKind::kNonnegative && !cones.empty() && cones.back().kind == ConeKind::kNonnegative) {
      cones.back().size += size;
    } else {
      cones.push_back({kind, size});
    }
  }
};

}  // namespace

ConicProgram build(const VectorXd& x_t, const std::vector<const ScenarioData*>& scenarios, const UncertainModel& model,
                   const FhocpConfig& cfg) {
  const int n = model.n();
  const int m = model.m();
  const int N = cfg.N;
  cfg.validate(m);
  if (x_t.size() != n) throw DimensionMismatch("x_t has wrong dimension");
  if (scenarios.empty()) throw DomainError("FHOCP needs at least one scenario");
  for (const auto* sc : scenarios) {
    if (sc->ops.horizon() != N) throw DimensionMismatch("scenario data prepared for a different horizon");
  }
  const int M = static_cast<int>(scenarios.size());
  const MatrixXd Lt = model.terminal_set().L().transpose();  // x'Q_f x = ||L' x||^2
  const MatrixXd Kf = model.K_f();
  const Eigen::LLT<MatrixXd> lam(cfg.weight(m));
  const MatrixXd LLt = lam.matrixL().transpose();  // v'Lambda v = ||L' v||^2

  // Variable layout.
  const int iV = 0;
  const int iz = N * m;
  const int iq = iz + 1;
  const int iw = iq + 1;
  const int iy0 = iw + 1;
  const int it0 = iy0 + n;
  const int iaux = it0 + 1;
  const int per_scenario = (N - 1) * (n + 1);
  const int nvar = iaux + M * per_scenario;
  auto iy = [&](int i, int j) { return iaux + i * per_scenario + (j - 1) * (n + 1); };
  auto it = [&](int i, int j) { return iy(i, j) + n; };

  ProgramBuilder pb;

  // Orthant rows.
  const int orth0 = pb.row();
  pb.coef(pb.add_row(0.0), iq, -1.0);  // q >= 0
  for (int i = 0; i < M; ++i) {
    const ScenarioData& sc = *scenarios[i];
    const auto& con = sc.constraints;
    // z - w - t_0 - sum_j t_ij >= 0
    const int r = pb.add_row(0.0);
    pb.coef(r, iz, -1.0);
    pb.coef(r, iw, 1.0);
    pb.coef(r, it0, 1.0);
    for (int j = 1; j < N; ++j) pb.coef(r, it(i, j), 1.0);
    // g_x + q - G_x x_j >= 0, j = 1..N-1
    for (int j = 1; j < N; ++j) {
      const VectorXd rhs = con.g_x - con.G_x * sc.free.col(j);
      const MatrixXd GP = con.G_x * sc.ops.Phi[j - 1];
      for (Eigen::Index k = 0; k < rhs.size(); ++k) {
        const int rr = pb.add_row(rhs(k));
        pb.coef(rr, iq, -1.0);
        for (int c = 0; c < j * m; ++c) pb.coef(rr, iV + c, GP(k, c));
      }
    }
    // g_u + q - G_u (K_f x_j + v_j) >= 0, j = 0..N-1
    for (int j = 0; j < N; ++j) {
      const MatrixXd GK = con.G_u * Kf;
      const VectorXd rhs = con.g_u - GK * sc.free.col(j);
      MatrixXd GP = MatrixXd::Zero(con.G_u.rows(), N * m);
      if (j > 0) GP = GK * sc.ops.Phi[j - 1];
      GP.middleCols(j * m, m) += con.G_u;
      for (Eigen::Index k = 0; k < rhs.size(); ++k) {
        const int rr = pb.add_row(rhs(k));
        pb.coef(rr, iq, -1.0);
        for (int c = 0; c <= j * m + m - 1; ++c) pb.coef(rr, iV + c, GP(k, c));
      }
    }
  }
  pb.close_cone(ConeKind::kNonnegative, orth0);

  // Distance pairs: ||x - y|| <= t and ||L' y|| <= 1.
  auto distance_pair = [&](int ty, int yy, const VectorXd& x_free, const MatrixXd* Phi, int ncols) {
    int first = pb.row();
    pb.coef(pb.add_row(0.0), ty, -1.0);
    for (int k = 0; k < n; ++k) {
      const int r = pb.add_row(x_free(k));
      if (Phi != nullptr) {
        for (int c = 0; c < ncols; ++c) pb.coef(r, iV + c, -(*Phi)(k, c));
      }
      pb.coef(r, yy + k, 1.0);
    }
    pb.close_cone(ConeKind::kSecondOrder, first);
    first = pb.row();
    pb.add_row(1.0);
    for (int k = 0; k < n; ++k) {
      const int r = pb.add_row(0.0);
      for (int c = 0; c < n; ++c) pb.coef(r, yy + c, -Lt(k, c));
    }
    pb.close_cone(ConeKind::kSecondOrder, first);
  };
  distance_pair(it0, iy0, x_t, nullptr, 0);
  for (int i = 0; i < M; ++i) {
    const ScenarioData& sc = *scenarios[i];
    for (int j = 1; j < N; ++j) distance_pair(it(i, j), iy(i, j), sc.free.col(j), &sc.ops.Phi[j - 1], j * m);
  }

  // Input cost: 2 w (1/2) >= sum_j ||L_Lambda' v_j||^2.
  {
    const int first = pb.row();
    pb.coef(pb.add_row(0.0), iw, -1.0);
    pb.add_row(0.5);
    for (int j = 0; j < N; ++j) {
      for (int k = 0; k < m; ++k) {
        const int r = pb.add_row(0.0);
        for (int c = 0; c < m; ++c) pb.coef(r, iV + j * m + c, -LLt(k, c));
      }
    }
    pb.close_cone(ConeKind::kRotatedSecondOrder, first);
  }

  // Terminal: 2 (1 + q)(1/2) >= ||L' x_N||^2.
  for (int i = 0; i < M; ++i) {
    const ScenarioData& sc = *scenarios[i];
    const VectorXd rhs = Lt * sc.free.col(N);
    const MatrixXd LP = Lt * sc.ops.Phi[N - 1];
    const int first = pb.row();
    pb.coef(pb.add_row(1.0), iq, -1.0);
    pb.add_row(0.5);
    for (int k = 0; k < n; ++k) {
      const int r = pb.add_row(rhs(k));
      for (int c = 0; c < N * m; ++c) pb.coef(r, iV + c, -LP(k, c));
    }
    pb.close_cone(ConeKind::kRotatedSecondOrder, first);
  }

  ConicProgram prog;
  prog.c = VectorXd::Zero(nvar);
  prog.c(iz) = 1.0;
  prog.c(iq) = cfg.alpha;
  prog.b = Eigen::Map<const VectorXd>(pb.b.data(), pb.row());
  prog.A.resize(pb.row(), nvar);
  prog.A.setFromTriplets(pb.A.begin(), pb.A.end());
  prog.A.makeCompressed();
  prog.cones = std::move(pb.cones);
  prog.var_map = {{"V", iV, N * m}, {"z", iz, 1},  {"q", iq, 1},  {"w", iw, 1},
                  {"y0", iy0, n},   {"t0", it0, 1}, {"aux", iaux, M * per_scenario}};
  prog.validate();
  return prog;
}

ConicProgram build(const VectorXd& x_t, const Multisample& omega, const UncertainModel& model, const FhocpConfig& cfg) {
  cfg.validate(model.m());
  std::vector<ScenarioData> data;
  data.reserve(omega.draws.size());
  for (const auto& d : omega.draws) data.push_back(prepare_scenario(x_t, d, model, cfg.N));
  std::vector<const ScenarioData*> ptrs;
  for (const auto& d : data) ptrs.push_back(&d);
  return build(x_t, ptrs, model, cfg);
}

FhocpSolution extract(const ConicProgram& program, const SolverResult& result) {
  if (result.status != SolverStatus::kSolved) {
    throw StatusNotSolved(std::string("conic solve ended with status ") + to_string(result.status));
  }
  if (result.x.size() != program.num_variables()) throw DimensionMismatch("solution does not fit the program");
  const NamedSlice* V = program.find("V");
  const NamedSlice* z = program.find("z");
  const NamedSlice* q = program.find("q");
  if (V == nullptr || z == nullptr || q == nullptr) throw ConfigError("program has no V/z/q slices");
  FhocpSolution sol;
  sol.V_star = result.x.segment(V->offset, V->length);
  sol.z_star = result.x(z->offset);
  sol.q_star = result.x(q->offset);
  if (sol.q_star < 0.0 && sol.q_star >= -1e-7) sol.q_star = 0.0;
  sol.objective = result.primal_objective;
  sol.status = result.status;
  sol.residuals = result.residuals;
  sol.iters = result.iters;
  sol.rounds = 1;
  return sol;
}

namespace {

double cost_of(const MatrixXd& X, const VectorXd& V, const UncertainModel& model, const MatrixXd& Lambda) {
  const auto N = X.cols() - 1;
  const Eigen::Map<const MatrixXd> Vm(V.data(), model.m(), N);
  double J = (Vm.cwiseProduct(Lambda * Vm)).sum();
  for (Eigen::Index j = 0; j < N; ++j) J += model.terminal_set().distance(X.col(j));
  return J;
}

}  // namespace

double scenario_cost(const ScenarioData& sc, const VectorXd& V, const UncertainModel& model, const MatrixXd& Lambda) {
  return cost_of(sc.states(V), V, model, Lambda);
}

double violation_h(const ScenarioData& sc, const VectorXd& V, double z, double q, const UncertainModel& model,
                   const MatrixXd& Lambda) {
  const int N = sc.ops.horizon();
  const auto& con = sc.constraints;
  const MatrixXd X = sc.states(V);
  const Eigen::Map<const MatrixXd> Vm(V.data(), model.m(), N);
  double h = -q;
  if (N > 1) {
    h = std::max(h, ((con.G_x * X.middleCols(1, N - 1)).colwise() - con.g_x).maxCoeff() - q);
  }
  const MatrixXd U = model.K_f() * X.leftCols(N) + Vm;
  h = std::max(h, ((con.G_u * U).colwise() - con.g_u).maxCoeff() - q);
  h = std::max(h, model.terminal_set().quadratic(X.col(N)) - 1.0 - q);
  h = std::max(h, cost_of(X, V, model, Lambda) - z);
  return h;
}

double violation_h(const FhocpSolution& sol, const VectorXd& x_t, const ScenarioDraw& delta, const UncertainModel& model,
                   const FhocpConfig& cfg) {
  const ScenarioData sc = prepare_scenario(x_t, delta, model, cfg.N);
  return violation_h(sc, sol.V_star, sol.z_star, sol.q_star, model, cfg.weight(model.m()));
}

namespace {

// (0, 0, 0) is feasible, hence optimal, when every scenario's uncorrected
// trajectory stays in X_f and within the constraints.
bool zero_is_optimal(const std::vector<ScenarioData>& data, const UncertainModel& model, int N) {
  const VectorXd V = VectorXd::Zero(static_cast<Eigen::Index>(N) * model.m());
  for (const auto& sc : data) {
    if (violation_h(sc, V, 0.0, 0.0, model, MatrixXd::Identity(model.m(), model.m())) > 0.0) return false;
  }
  return true;
}

FhocpSolution solve_subset(const VectorXd& x_t, const std::vector<const ScenarioData*>& subset,
                           const UncertainModel& model, const FhocpConfig& cfg, const SolverSettings& settings) {
  const ConicProgram prog = build(x_t, subset, model, cfg);
  const SolverResult res = solve(prog, settings);
  FhocpSolution sol;
  if (res.status == SolverStatus::kSolved) {
    sol = extract(prog, res);
  } else {
    sol.status = res.status;
    sol.residuals = res.residuals;
    sol.iters = res.iters;
    sol.V_star = VectorXd::Zero(static_cast<Eigen::Index>(cfg.N) * model.m());
    sol.z_star = std::numeric_limits<double>::infinity();
    sol.q_star = 0.0;
    sol.objective = std::numeric_limits<double>::infinity();
    sol.rounds = 1;
  }
  sol.scenarios_in_program = static_cast<int>(subset.size());
  return sol;
}

}  // namespace

FhocpSolution solve_fhocp(const VectorXd& x_t, const Multisample& omega, const UncertainModel& model,
                          const FhocpConfig& cfg, const FhocpOptions& options) {
  cfg.validate(model.m());
  if (omega.draws.empty()) throw DomainError("FHOCP needs at least one scenario");
  const Eigen::Index nV = static_cast<Eigen::Index>(cfg.N) * model.m();
  if (options.seed_V.size() != 0 && options.seed_V.size() != nV) throw DimensionMismatch("seed_V has wrong length");
  const int M = omega.size();
  const int d = model.m() * cfg.N + 2;
  std::vector<ScenarioData> data;
  data.reserve(M);
  for (const auto& draw : omega.draws) data.push_back(prepare_scenario(x_t, draw, model, cfg.N));

  if (zero_is_optimal(data, model, cfg.N)) {
    FhocpSolution sol;
    sol.V_star = VectorXd::Zero(nV);
    sol.status = SolverStatus::kSolved;
    return sol;
  }

  std::vector<const ScenarioData*> all;
  for (const auto& sc : data) all.push_back(&sc);
  if (options.strategy == FhocpStrategy::kFull || M <= 2 * d) {
    return solve_subset(x_t, all, model, cfg, options.solver);
  }

  const MatrixXd Lambda = cfg.weight(model.m());
  std::vector<double> h(M);
  std::vector<int> order(M);
  std::vector<char> in_set(M, 0);

  // Seed the working set with the scenarios most violated by the seed corrections.
  const VectorXd V0 = options.seed_V.size() == nV ? options.seed_V : VectorXd::Zero(nV);
  for (int i = 0; i < M; ++i) h[i] = violation_h(data[i], V0, 0.0, 0.0, model, Lambda);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return h[a] > h[b]; });
  std::vector<int> members(order.begin(), order.begin() + 2 * d);
  for (int i : members) in_set[i] = 1;

  int total_iters = 0;
  int rounds = 0;
  while (true) {
    std::vector<int> sorted = members;
    std::sort(sorted.begin(), sorted.end());
    std::vector<const ScenarioData*> subset;
    for (int i : sorted) subset.push_back(&data[i]);
    FhocpSolution sol = solve_subset(x_t, subset, model, cfg, options.solver);
    total_iters += sol.iters;
    ++rounds;
    if (!sol.solved()) {
      // Retry on the full program before giving up.
      FhocpSolution full = solve_subset(x_t, all, model, cfg, options.solver);
      full.iters += total_iters;
      full.rounds = rounds + 1;
      return full;
    }

    const double tol = options.violation_tol * (1.0 + std::abs(sol.z_star));
    std::vector<int> violated;
    for (int i = 0; i < M; ++i) {
      if (in_set[i]) continue;
      h[i] = violation_h(data[i], sol.V_star, sol.z_star, sol.q_star, model, Lambda);
      if (h[i] > tol) violated.push_back(i);
    }
    if (violated.empty()) {
      sol.iters = total_iters;
      sol.rounds = rounds;
      return sol;
    }
    std::stable_sort(violated.begin(), violated.end(), [&](int a, int b) { return h[a] > h[b]; });
    const int add = std::min<int>(static_cast<int>(violated.size()), d);
    for (int k = 0; k < add; ++k) {
      members.push_back(violated[k]);
      in_set[violated[k]] = 1;
    }
  }
}

double reliability_estimate(const FhocpSolution& sol, const VectorXd& x_t, const UncertainModel& model,
                            const FhocpConfig& cfg, int K, const StreamKey& base, double tol) {
  if (K < 1) throw DomainError("reliability estimate needs K >= 1");
  StreamKey key = base;
  key.purpose = StreamPurpose::kReliability;
  int ok = 0;
  for (int k = 0; k < K; ++k) {
    key.index = static_cast<std::uint64_t>(k);
    RandomStream rng(key);
    const ScenarioDraw delta = model.sample_draw(rng, cfg.N);
    ok += violation_h(sol, x_t, delta, model, cfg) <= tol;
  }
  return static_cast<double>(ok) / K;
}

}  // namespace scmpc
