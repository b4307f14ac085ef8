// Command-line front end: sample sizes, single FHOCP solves, closed-loop
// trials and Monte Carlo studies.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "scmpc/controller.hpp"
#include "scmpc/errors.hpp"
#include "scmpc/fhocp.hpp"
#include "scmpc/harness.hpp"
#include "scmpc/model_json.hpp"
#include "scmpc/samplesize.hpp"

using nlohmann::json;
using namespace scmpc;

namespace {

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

// +inf / nan are not JSON numbers.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << text << '\n';
}

struct SampleSizeArgs {
  double p = 0.95;
  double beta = 1e-9;
  int d = 0;
  int m = 1;
  int N = 10;
  bool with_explicit = false;
};

int run_samplesize(const SampleSizeArgs& a) {
  const int d = a.d > 0 ? a.d : decision_count(a.m, a.N);
  const ScenarioBudget b = scenario_budget(a.p, a.beta, d);
  json j;
  j["p"] = a.p;
  j["beta"] = a.beta;
  j["d"] = d;
  j["M"] = b.M;
  j["log_phi"] = b.log_phi;
  j["phi"] = std::exp(b.log_phi);
  if (a.with_explicit) j["explicit_bound"] = explicit_bound(a.p, a.beta, d);
  std::cout << j.dump(2) << '\n';
  return 0;
}

struct SolveArgs {
  std::string model = kExampleModelName;
  std::vector<double> x{5.0, 2.75};
  int N = 10;
  double p = 0.95;
  double beta = 1e-9;
  std::int64_t M = 0;
  std::uint64_t seed = 1;
  double alpha = 1e4;
  double lambda = 1.0;
  bool full = false;
  std::string dump;
  std::string out;
};

int run_solve(const SolveArgs& a) {
  const UncertainModel model = resolve_model(a.model);
  const VectorXd x = Eigen::Map<const VectorXd>(a.x.data(), static_cast<Eigen::Index>(a.x.size()));
  if (x.size() != model.n()) throw DimensionMismatch("--x has the wrong number of components");
  MpcsConfig mc;
  mc.p = a.p;
  mc.beta = a.beta;
  mc.M = a.M;
  mc.seed = a.seed;
  mc.fhocp.N = a.N;
  mc.fhocp.alpha = a.alpha;
  mc.fhocp.Lambda = a.lambda * MatrixXd::Identity(model.m(), model.m());
  mc.validate(model.m());
  const int M = mc.scenario_count(model.m());
  const Multisample omega = controller_multisample(model, mc, 0, M);

  if (!a.dump.empty()) {
    std::ofstream out(a.dump);
    if (!out) throw ConfigError("cannot write " + a.dump);
    write_program_text(out, build(x, omega, model, mc.fhocp));
  }
  FhocpOptions opt;
  opt.strategy = a.full ? FhocpStrategy::kFull : FhocpStrategy::kWorkingSet;
  const FhocpSolution sol = solve_fhocp(x, omega, model, mc.fhocp, opt);

  json j;
  j["status"] = to_string(sol.status);
  j["M"] = M;
  j["V_star"] = vec_json(sol.V_star);
  j["z_star"] = num(sol.z_star);
  j["q_star"] = num(sol.q_star);
  j["objective"] = num(sol.objective);
  j["residuals"] = {{"primal", sol.residuals.primal}, {"dual", sol.residuals.dual}, {"gap", sol.residuals.gap}};
  j["iters"] = sol.iters;
  j["rounds"] = sol.rounds;
  j["scenarios_in_program"] = sol.scenarios_in_program;
  j["u0"] = vec_json(model.K_f() * x + sol.V_star.head(model.m()));
  write_text(a.out, j.dump(2));
  return sol.solved() ? 0 : 2;
}

struct SimulateArgs {
  std::string config;
  std::uint64_t trial = 0;
  std::string trace;
};

json record_json(const TrialRecord& r) {
  return {{"trial", r.trial},
          {"theta", vec_json(r.theta)},
          {"failure", r.failure},
          {"failure_kind", to_string(r.failure_kind)},
          {"first_failure_t", r.first_failure_t}};
}

int run_simulate(const SimulateArgs& a) {
  const TrialConfig cfg = TrialConfig::from_file(a.config);
  const UncertainModel model = resolve_model(cfg.model);
  cfg.validate(model);
  json j;
  if (cfg.mode != TrialMode::kRh) j["fh"] = record_json(run_fh_trial(model, cfg, a.trial));
  if (cfg.mode != TrialMode::kFh) {
    const TrialRecord r = simulate_rh(model, cfg, a.trial, true);
    j["rh"] = record_json(r);
    j["rh"]["steps"] = r.trace.size();
    if (!a.trace.empty()) {
      std::ofstream out(a.trace);
      if (!out) throw ConfigError("cannot write " + a.trace);
      write_trace_csv(out, r.trace, model.n(), model.m());
    }
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

struct MonteCarloArgs {
  std::string config;
  std::string out;
  bool full = false;
  int trials = 0;
  int threads = -1;
  bool quiet = false;
};

int run_montecarlo(const MonteCarloArgs& a) {
  TrialConfig cfg = TrialConfig::from_file(a.config);
  if (a.full) cfg.n_trials = kFullTrialCount;
  if (a.trials > 0) cfg.n_trials = a.trials;
  if (a.threads >= 0) cfg.threads = a.threads;
  const int n = cfg.n_trials;
  const int every = std::max(1, n / 20);
  auto progress = [&](int done) {
    if (!a.quiet && (done % every == 0 || done == n)) std::cerr << "trials " << done << "/" << n << '\n';
  };
  const MonteCarloSummary s = monte_carlo(cfg, progress);
  write_text(a.out, summary_json(s));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenario-based MPC with constraint-violation levels"};
  app.require_subcommand(1);

  SampleSizeArgs ss;
  auto* c_ss = app.add_subcommand("samplesize", "Scenario count for reliability p with confidence 1 - beta");
  c_ss->add_option("--p", ss.p, "Reliability level in (0, 1)")->required();
  c_ss->add_option("--beta", ss.beta, "Confidence parameter in (0, 1)")->required();
  c_ss->add_option("--d", ss.d, "Decision count (default m N + 2)");
  c_ss->add_option("--m", ss.m, "Input dimension");
  c_ss->add_option("--N", ss.N, "Horizon");
  c_ss->add_flag("--explicit", ss.with_explicit, "Also print the closed-form sufficient count");

  SolveArgs so;
  auto* c_so = app.add_subcommand("solve", "Solve one scenario FHOCP");
  c_so->add_option("--model", so.model, "paper-example or a model JSON path");
  c_so->add_option("--x", so.x, "Current state")->delimiter(',');
  c_so->add_option("--N", so.N, "Horizon");
  c_so->add_option("--p", so.p, "Reliability level");
  c_so->add_option("--beta", so.beta, "Confidence parameter");
  c_so->add_option("--M", so.M, "Explicit scenario count (overrides p, beta)");
  c_so->add_option("--seed", so.seed, "Master seed of the multisample");
  c_so->add_option("--alpha", so.alpha, "Weight of the violation level");
  c_so->add_option("--lambda", so.lambda, "Input weight (Lambda = lambda I)");
  c_so->add_flag("--full", so.full, "Solve over all scenarios at once");
  c_so->add_option("--dump-program", so.dump, "Write the cone program in the plain-text format");
  c_so->add_option("--out", so.out, "Solution JSON (default stdout)");

  SimulateArgs si;
  auto* c_si = app.add_subcommand("simulate", "Run one trial of a config");
  c_si->add_option("--config", si.config, "Trial config JSON")->required();
  c_si->add_option("--trial", si.trial, "Trial index");
  c_si->add_option("--trace", si.trace, "Closed-loop trace CSV");

  MonteCarloArgs mc;
  auto* c_mc = app.add_subcommand("montecarlo", "Estimate the success probability over many trials");
  c_mc->add_option("--config", mc.config, "Trial config JSON")->required();
  c_mc->add_option("--out", mc.out, "Summary JSON (default stdout)");
  c_mc->add_flag("--full", mc.full, "Run 100000 trials");
  c_mc->add_option("--trials", mc.trials, "Override n_trials");
  c_mc->add_option("--threads", mc.threads, "Worker threads (0: all cores)");
  c_mc->add_flag("--quiet", mc.quiet, "No progress on stderr");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_ss) return run_samplesize(ss);
    if (*c_so) return run_solve(so);
    if (*c_si) return run_simulate(si);
    if (*c_mc) return run_montecarlo(mc);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
