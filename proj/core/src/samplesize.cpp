#include "scmpc/samplesize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "scmpc/errors.hpp"

namespace scmpc {
namespace {

void check_probability(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) throw DomainError(std::string(name) + " must lie in (0, 1)");
}

}  // namespace

double log_phi(double p, int d, std::int64_t M) {
  check_probability(p, "p");
  if (d < 1) throw DomainError("d must be at least 1");
  if (M < d) throw DomainError("Phi requires M >= d");

  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);  // log(1 - p)
  const double Mf = static_cast<double>(M);

  // log of term j: log C(M, j) + j log(1-p) + (M - j) log p, with
  // log C(M, j+1) = log C(M, j) + log((M - j) / (j + 1)).
  std::vector<double> terms(static_cast<std::size_t>(d));
  double log_binom = 0.0;
  for (int j = 0; j < d; ++j) {
    if (j > 0) log_binom += std::log((Mf - (j - 1)) / j);
    terms[j] = log_binom + j * log_q + (Mf - j) * log_p;
  }
  const double peak = *std::max_element(terms.begin(), terms.end());
  if (peak == -std::numeric_limits<double>::infinity()) return peak;
  double sum = 0.0;
  for (const double t : terms) sum += std::exp(t - peak);
  return peak + std::log(sum);
}

std::int64_t min_scenarios(double p, double beta, int d, std::int64_t cap) {
  check_probability(p, "p");
  check_probability(beta, "beta");
  if (d < 1) throw DomainError("d must be at least 1");
  if (cap < d) throw Overflow("scenario cap below d");

  const double log_beta = std::log(beta);
  auto ok = [&](std::int64_t M) { return log_phi(p, d, M) <= log_beta; };

  std::int64_t lo = d;  // candidate lower end
  if (ok(lo)) return lo;
  std::int64_t hi = d;
  double prev = log_phi(p, d, hi);
  while (true) {
    if (hi >= cap) throw Overflow("required scenario count exceeds cap");
    lo = hi;
    hi = std::min(cap, hi * 2);
    const double cur = log_phi(p, d, hi);
    if (cur > prev + 1e-12 * std::max(1.0, std::abs(prev))) throw Error("Phi not monotone in M during bracketing");
    prev = cur;
    if (cur <= log_beta) break;
  }
  // Invariant: !ok(lo), ok(hi).
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (ok(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

ScenarioBudget scenario_budget(double p, double beta, int d, std::int64_t cap) {
  ScenarioBudget b;
  b.p = p;
  b.beta = beta;
  b.d = d;
  b.M = min_scenarios(p, beta, d, cap);
  b.log_phi = log_phi(p, d, b.M);
  return b;
}

std::int64_t explicit_bound(double p, double beta, int d) {
  check_probability(p, "p");
  check_probability(beta, "beta");
  if (d < 1) throw DomainError("d must be at least 1");
  const double value = 2.0 / (1.0 - p) * (-std::log(beta) + d);
  // Shave rounding noise so an exactly integral bound is not bumped up.
  return static_cast<std::int64_t>(std::ceil(value * (1.0 - 8.0 * std::numeric_limits<double>::epsilon())));
}

}  // namespace scmpc
