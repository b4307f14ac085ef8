#include "scmpc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "scmpc/errors.hpp"
#include "scmpc/model_json.hpp"

namespace scmpc {

namespace {

using nlohmann::json;

VectorXd read_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

MatrixXd read_square(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array");
  const auto k = static_cast<Eigen::Index>(j.size());
  MatrixXd W(k, k);
  for (Eigen::Index r = 0; r < k; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != k) throw ConfigError(what + ": not square");
    for (Eigen::Index c = 0; c < k; ++c) W(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return W;
}

TrialMode parse_mode(const std::string& s) {
  if (s == "fh") return TrialMode::kFh;
  if (s == "rh") return TrialMode::kRh;
  if (s == "both") return TrialMode::kBoth;
  throw ConfigError("mode must be fh, rh or both");
}

StreamKey trial_key(std::uint64_t seed, std::uint64_t trial, std::uint64_t step, StreamPurpose purpose) {
  StreamKey key;
  key.master_seed = seed;
  key.trial = trial;
  key.step = step;
  key.purpose = purpose;
  return key;
}

// Marks the first violation; later ones are ignored.
void record_failure(TrialRecord& rec, FailureKind kind, int t) {
  if (rec.failure) return;
  rec.failure = true;
  rec.failure_kind = kind;
  rec.first_failure_t = t;
}

bool violates(const MatrixXd& G, const VectorXd& g, const VectorXd& v) {
  return !((G * v - g).array() <= kHardConstraintTol).all();
}

struct TrialPair {
  TrialRecord fh;
  TrialRecord rh;
};

// Open-loop and closed-loop trial sharing the solve at x0: both use omega_0
// of the trial's controller.
TrialPair run_trial(const UncertainModel& model, const TrialConfig& cfg, std::uint64_t trial, bool fh, bool rh,
                    bool keep_trace);

}  // namespace

const char* to_string(TrialMode mode) {
  switch (mode) {
    case TrialMode::kFh:
      return "fh";
    case TrialMode::kRh:
      return "rh";
    case TrialMode::kBoth:
      return "both";
  }
  return "unknown";
}

const char* to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::kNone:
      return "none";
    case FailureKind::kState:
      return "state";
    case FailureKind::kInput:
      return "input";
    case FailureKind::kTerminal:
      return "terminal";
    case FailureKind::kSolver:
      return "solver";
  }
  return "unknown";
}

TrialConfig TrialConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("trial config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("trial config must be a JSON object");
  TrialConfig c;
  try {
    for (const auto& [key, val] : j.items()) {
      if (key == "model") {
        c.model = val.get<std::string>();
      } else if (key == "x0") {
        c.x0 = read_vector(val, "x0");
      } else if (key == "N") {
        c.N = val.get<int>();
      } else if (key == "p") {
        c.p = val.get<double>();
      } else if (key == "beta") {
        c.beta = val.get<double>();
      } else if (key == "M") {
        c.M = val.is_null() ? 0 : val.get<std::int64_t>();
      } else if (key == "epsilon") {
        c.epsilon = val.get<double>();
      } else if (key == "alpha") {
        c.alpha = val.get<double>();
      } else if (key == "lambda") {
        if (val.is_number()) {
          c.Lambda = MatrixXd::Constant(1, 1, val.get<double>());
        } else {
          c.Lambda = read_square(val, "lambda");
        }
      } else if (key == "T_sim") {
        c.T_sim = val.get<int>();
      } else if (key == "n_trials") {
        c.n_trials = val.get<int>();
      } else if (key == "seed") {
        c.seed = val.get<std::uint64_t>();
      } else if (key == "mode") {
        c.mode = parse_mode(val.get<std::string>());
      } else if (key == "threads") {
        c.threads = val.get<int>();
      } else {
        throw ConfigError("trial config: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("trial config: ") + e.what());
  }
  return c;
}

TrialConfig TrialConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trial config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

VectorXd TrialConfig::initial_state() const {
  if (x0.size() != 0) return x0;
  return Eigen::Vector2d(5.0, 2.75);
}

void TrialConfig::validate(const UncertainModel& model) const {
  if (n_trials < 1) throw ConfigError("n_trials must be at least 1");
  if (N < 1) throw ConfigError("N must be at least 1");
  if (mode != TrialMode::kFh && steps() < N + 10) throw ConfigError("T_sim must be at least N + 10 in rh mode");
  if (threads < 0) throw ConfigError("threads must be non-negative");
  if (initial_state().size() != model.n()) throw DimensionMismatch("x0 has wrong dimension");
  mpcs(model.m(), 0).validate(model.m());
}

MpcsConfig TrialConfig::mpcs(int m, std::uint64_t trial) const {
  MpcsConfig c;
  c.p = p;
  c.beta = beta;
  c.M = M;
  c.epsilon = epsilon;
  c.fhocp.N = N;
  c.fhocp.alpha = alpha;
  c.fhocp.Lambda = Lambda.size() == 1 ? MatrixXd(Lambda(0, 0) * MatrixXd::Identity(m, m)) : Lambda;
  c.seed = seed;
  c.trial = trial;
  return c;
}

VectorXd true_theta(const UncertainModel& model, std::uint64_t seed, std::uint64_t trial) {
  RandomStream rng(trial_key(seed, trial, 0, StreamPurpose::kTrueTheta));
  return model.sample_theta(rng);
}

MatrixXd true_gamma(const UncertainModel& model, std::uint64_t seed, std::uint64_t trial, int steps) {
  MatrixXd out(steps, model.m_gamma());
  for (int t = 0; t < steps; ++t) {
    RandomStream rng(trial_key(seed, trial, static_cast<std::uint64_t>(t), StreamPurpose::kTrueGamma));
    out.row(t) = model.sample_gamma_sequence(rng, 1).row(0);
  }
  return out;
}

TrialRecord simulate_fh(const UncertainModel& model, const VectorXd& V_star, const ScenarioDraw& true_delta,
                        const VectorXd& x0) {
  const int m = model.m();
  if (V_star.size() == 0 || V_star.size() % m != 0) throw DimensionMismatch("V_star is not a whole number of blocks");
  const int N = static_cast<int>(V_star.size() / m);
  if (true_delta.horizon() < N) throw DimensionMismatch("true draw is shorter than the horizon");
  if (x0.size() != model.n()) throw DimensionMismatch("x0 has wrong dimension");
  const ModelEvaluation ev = model.evaluate(true_delta.theta);
  const auto& S = ev.matrices;
  const auto& con = ev.constraints;

  TrialRecord rec;
  rec.theta = true_delta.theta;
  VectorXd x = x0;
  for (int j = 0; j < N; ++j) {
    const VectorXd u = model.K_f() * x + V_star.segment(j * m, m);
    if (violates(con.G_u, con.g_u, u)) record_failure(rec, FailureKind::kInput, j);
    x = S.A * x + S.B * u + S.B_gamma * true_delta.gamma_seq.row(j).transpose();
    if (violates(con.G_x, con.g_x, x)) record_failure(rec, FailureKind::kState, j + 1);
  }
  if (!(model.terminal_set().quadratic(x) <= 1.0 + kHardConstraintTol)) record_failure(rec, FailureKind::kTerminal, N);
  return rec;
}

TrialRecord run_fh_trial(const UncertainModel& model, const TrialConfig& cfg, std::uint64_t trial) {
  return run_trial(model, cfg, trial, true, false, false).fh;
}

TrialRecord simulate_rh(const UncertainModel& model, const TrialConfig& cfg, std::uint64_t trial, bool keep_trace) {
  return run_trial(model, cfg, trial, false, true, keep_trace).rh;
}

namespace {

TrialPair run_trial(const UncertainModel& model, const TrialConfig& cfg, std::uint64_t trial, bool fh, bool rh,
                    bool keep_trace) {
  const MpcsConfig mc = cfg.mpcs(model.m(), trial);
  const int M = mc.scenario_count(model.m());
  const int N = cfg.N;
  const int window = N + 10;
  const int steps = rh ? std::max(cfg.steps(), N) : N;
  const VectorXd x0 = cfg.initial_state();

  ScenarioDraw truth;
  truth.theta = true_theta(model, cfg.seed, trial);
  truth.gamma_seq = true_gamma(model, cfg.seed, trial, steps);

  TrialPair out;
  out.fh.trial = out.rh.trial = trial;
  out.fh.theta = out.rh.theta = truth.theta;

  const FhocpSolution sol = solve_fhocp(x0, controller_multisample(model, mc, 0, M), model, mc.fhocp, mc.options);
  if (!sol.solved()) {
    record_failure(out.fh, FailureKind::kSolver, 0);
    record_failure(out.rh, FailureKind::kSolver, 0);
    return out;
  }
  if (fh) {
    TrialRecord r = simulate_fh(model, sol.V_star, truth, x0);
    r.trial = trial;
    out.fh = std::move(r);
  }
  if (!rh) return out;

  const ModelEvaluation ev = model.evaluate(truth.theta);
  const auto& S = ev.matrices;
  const auto& con = ev.constraints;
  TrialRecord& rec = out.rh;
  ControlStep cs = mpcs_init_with_solution(x0, sol, M, model, mc);
  VectorXd x = x0;
  for (int t = 0; t < steps; ++t) {
    if (keep_trace) rec.trace.push_back(cs.diag);
    const VectorXd& u = cs.u;
    if (t < window && violates(con.G_u, con.g_u, u)) record_failure(rec, FailureKind::kInput, t);
    x = S.A * x + S.B * u + S.B_gamma * truth.gamma_seq.row(t).transpose();
    if (t + 1 <= window && violates(con.G_x, con.g_x, x)) record_failure(rec, FailureKind::kState, t + 1);
    if (t + 1 == window && !(model.terminal_set().quadratic(x) <= 1.0 + kHardConstraintTol)) {
      record_failure(rec, FailureKind::kTerminal, window);
    }
    if (rec.failure && !keep_trace) break;
    if (!x.allFinite()) break;
    if (t + 1 < steps) cs = mpcs_step(cs.state, x, model, mc);
  }
  return out;
}

}  // namespace

double success_rate(int n_trials, int n_failures) {
  if (n_trials < 1) throw DomainError("success rate needs at least one trial");
  if (n_failures < 0 || n_failures > n_trials) throw DomainError("failure count out of range");
  return static_cast<double>(n_trials - n_failures) / n_trials;
}

MonteCarloSummary monte_carlo(const TrialConfig& cfg, const std::function<void(int)>& progress) {
  const auto start = std::chrono::steady_clock::now();
  const UncertainModel model = resolve_model(cfg.model);
  cfg.validate(model);

  MonteCarloSummary summary;
  summary.config = cfg;
  summary.M = cfg.mpcs(model.m(), 0).scenario_count(model.m());
  summary.has_fh = cfg.mode != TrialMode::kRh;
  summary.has_rh = cfg.mode != TrialMode::kFh;

  const int n = cfg.n_trials;
  std::vector<FailureKind> fh_kind(n, FailureKind::kNone);
  std::vector<FailureKind> rh_kind(n, FailureKind::kNone);
  std::atomic<int> next{0};
  std::mutex progress_mutex;
  int done = 0;
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    while (true) {
      const int k = next.fetch_add(1);
      if (k >= n) return;
      try {
        const TrialPair r =
            run_trial(model, cfg, static_cast<std::uint64_t>(k), summary.has_fh, summary.has_rh, false);
        fh_kind[k] = r.fh.failure_kind;
        rh_kind[k] = r.rh.failure_kind;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(++done);
      }
    }
  };

  int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, n);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  auto tally = [n](const std::vector<FailureKind>& kinds, ModeSummary& s) {
    s.n_trials = n;
    for (FailureKind k : kinds) {
      if (k == FailureKind::kNone) continue;
      ++s.n_failures;
      ++s.kinds[static_cast<std::size_t>(k)];
    }
  };
  if (summary.has_fh) tally(fh_kind, summary.fh);
  if (summary.has_rh) tally(rh_kind, summary.rh);
  summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

std::string summary_json(const MonteCarloSummary& s) {
  json j;
  json failures = json::object();
  json kinds = json::object();
  auto kind_counts = [](const ModeSummary& m) {
    json k = json::object();
    for (FailureKind f : {FailureKind::kState, FailureKind::kInput, FailureKind::kTerminal, FailureKind::kSolver}) {
      k[to_string(f)] = m.kinds[static_cast<std::size_t>(f)];
    }
    return k;
  };
  if (s.has_fh) {
    j["p_hat_fh"] = s.fh.p_hat();
    failures["fh"] = s.fh.n_failures;
    kinds["fh"] = kind_counts(s.fh);
  }
  if (s.has_rh) {
    j["p_hat_rh"] = s.rh.p_hat();
    failures["rh"] = s.rh.n_failures;
    kinds["rh"] = kind_counts(s.rh);
  }
  j["n_trials"] = s.config.n_trials;
  j["n_failures"] = failures;
  j["failure_kinds"] = kinds;
  j["M"] = s.M;
  j["p"] = s.config.p;
  j["beta"] = s.config.beta;
  j["seed"] = s.config.seed;
  j["mode"] = to_string(s.config.mode);
  j["wall_seconds"] = s.wall_seconds;
  return j.dump(2);
}

}  // namespace scmpc
