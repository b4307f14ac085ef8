#pragma once

#include <cstdint>

namespace scmpc {

/// Number of scenarios that guarantees reliability p with confidence 1 - beta
/// for a random convex program with d decision variables.
struct ScenarioBudget {
  double p = 0.0;
  double beta = 0.0;
  int d = 0;
  std::int64_t M = 0;
  double log_phi = 0.0;  // log Phi(p, d, M)
};

/// log of the binomial tail
///   Phi(p, d, M) = sum_{j=0}^{d-1} C(M, j) (1-p)^j p^(M-j),
/// accumulated term by term in the log domain with log-sum-exp, so values
/// far below the double range (beta = 1e-300 and smaller) stay exact to
/// about 12 significant digits after exponentiation.
/// Throws DomainError unless 0 < p < 1 and 1 <= d <= M.
double log_phi(double p, int d, std::int64_t M);

inline constexpr std::int64_t kDefaultScenarioCap = 100'000'000;

/// Smallest M >= d with Phi(p, d, M) <= beta. Exponential bracketing then
/// bisection; Phi is nonincreasing in M and the search checks it.
/// Throws DomainError on bad arguments and Overflow when M would exceed cap.
std::int64_t min_scenarios(double p, double beta, int d, std::int64_t cap = kDefaultScenarioCap);

/// min_scenarios packaged with the tail value at the result.
ScenarioBudget scenario_budget(double p, double beta, int d, std::int64_t cap = kDefaultScenarioCap);

/// Closed-form sufficient count ceil(2 / (1 - p) * (ln(1 / beta) + d)).
std::int64_t explicit_bound(double p, double beta, int d);

/// d = m N + 2: the corrections plus the worst-case cost and violation slack.
inline int decision_count(int m, int N) { return m * N + 2; }

}  // namespace scmpc
