#include <cmath>
#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include "scmpc/errors.hpp"
#include "scmpc/samplesize.hpp"

using namespace scmpc;

namespace {

// Independent oracle: the tail summed directly in long double, with the
// binomial term built by the ratio recursion from j = 0.
long double phi_oracle(long double p, int d, std::int64_t M) {
  long double term = std::pow(p, static_cast<long double>(M));  // j = 0
  long double sum = term;
  for (int j = 1; j < d; ++j) {
    term *= static_cast<long double>(M - j + 1) / j * (1.0L - p) / p;
    sum += term;
  }
  return sum;
}

std::int64_t min_scenarios_oracle(double p, double beta, int d) {
  std::int64_t M = d;
  while (phi_oracle(p, d, M) > beta) ++M;
  return M;
}

}  // namespace

TEST(Phi, SingleTerm) {
  EXPECT_NEAR(std::exp(log_phi(0.5, 1, 10)), std::pow(2.0, -10), 1e-18);
  EXPECT_NEAR(log_phi(0.3, 1, 17), 17 * std::log(0.3), 1e-12);
}

TEST(Phi, FullSumMissesOnlyTheLastTerm) {
  // d = M sums j = 0..M-1, everything but (1-p)^M.
  for (int M : {1, 5, 30, 200}) EXPECT_NEAR(log_phi(0.5, M, M), std::log1p(-std::pow(0.5, M)), 1e-12);
  EXPECT_NEAR(log_phi(0.5, 200, 200), 0.0, 1e-12);
}

TEST(Phi, MatchesOracle) {
  for (double p : {0.05, 0.3, 0.6, 0.95}) {
    for (int d : {1, 2, 12, 30}) {
      for (std::int64_t M : {30, 100, 400, 2000}) {
        if (d > M) continue;
        const long double ref = phi_oracle(p, d, M);
        if (ref < 1e-300L) continue;
        const double got = std::exp(log_phi(p, d, M));
        EXPECT_NEAR(got / static_cast<double>(ref), 1.0, 1e-12) << p << ' ' << d << ' ' << M;
      }
    }
  }
}

TEST(Phi, TinyValuesStayFinite) {
  const double lp = log_phi(0.5, 3, 5000);
  EXPECT_TRUE(std::isfinite(lp));
  EXPECT_LT(lp, std::log(1e-300));
}

TEST(Phi, DomainErrors) {
  EXPECT_THROW(log_phi(0.0, 1, 5), DomainError);
  EXPECT_THROW(log_phi(1.0, 1, 5), DomainError);
  EXPECT_THROW(log_phi(0.5, 6, 5), DomainError);
  EXPECT_THROW(log_phi(0.5, 0, 5), DomainError);
}

TEST(Phi, MonotoneInMAndD) {
  for (double p : {0.1, 0.5, 0.9}) {
    for (int d = 1; d <= 15; ++d) {
      for (std::int64_t M = d; M < d + 80; ++M) {
        EXPECT_LE(log_phi(p, d, M + 1), log_phi(p, d, M) + 1e-12);
        if (d + 1 <= M) EXPECT_GE(log_phi(p, d + 1, M), log_phi(p, d, M) - 1e-12);
      }
    }
  }
}

TEST(MinScenarios, MatchesOracle) {
  for (double p : {0.05, 0.3, 0.6, 0.95}) {
    for (double beta : {1e-2, 1e-6, 1e-9}) {
      for (int d : {1, 5, 12}) {
        EXPECT_EQ(min_scenarios(p, beta, d), min_scenarios_oracle(p, beta, d)) << p << ' ' << beta << ' ' << d;
      }
    }
  }
}

TEST(MinScenarios, Minimality) {
  for (double p : {0.05, 0.2, 0.5, 0.8, 0.95, 0.99}) {
    for (double beta : {0.1, 1e-3, 1e-9, 1e-50, 1e-300}) {
      for (int d : {1, 3, 12, 40}) {
        const std::int64_t M = min_scenarios(p, beta, d);
        EXPECT_GE(M, d);
        EXPECT_LE(log_phi(p, d, M), std::log(beta));
        if (M > d) EXPECT_GT(log_phi(p, d, M - 1), std::log(beta));
      }
    }
  }
}

TEST(MinScenarios, Monotone) {
  const std::vector<double> ps{0.05, 0.3, 0.6, 0.95};
  const std::vector<double> betas{1e-1, 1e-3, 1e-9, 1e-20};
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t k = 0; k < betas.size(); ++k) {
      for (int d = 1; d < 20; ++d) {
        const auto M = min_scenarios(ps[i], betas[k], d);
        EXPECT_LE(M, min_scenarios(ps[i], betas[k], d + 1));
        if (i + 1 < ps.size()) EXPECT_LE(M, min_scenarios(ps[i + 1], betas[k], d));
        if (k + 1 < betas.size()) EXPECT_LE(M, min_scenarios(ps[i], betas[k + 1], d));
      }
    }
  }
}

TEST(MinScenarios, Cap) {
  EXPECT_THROW(min_scenarios(0.999999, 1e-9, 12, 1000), Overflow);
  EXPECT_THROW(min_scenarios(0.5, 0.0, 12), DomainError);
  EXPECT_THROW(min_scenarios(0.5, 1e-3, 0), DomainError);
}

TEST(MinScenarios, BudgetCarriesTail) {
  const ScenarioBudget b = scenario_budget(0.95, 1e-9, 12);
  EXPECT_EQ(b.M, min_scenarios(0.95, 1e-9, 12));
  EXPECT_DOUBLE_EQ(b.log_phi, log_phi(0.95, 12, b.M));
  EXPECT_LE(b.log_phi, std::log(1e-9));
}

TEST(ExplicitBound, Values) {
  EXPECT_EQ(explicit_bound(0.95, 1e-9, 12), 1309);
  EXPECT_EQ(explicit_bound(0.5, std::exp(-1.0), 1), 8);
}

TEST(ExplicitBound, Dominates) {
  for (double p : {0.05, 0.3, 0.6, 0.9, 0.99}) {
    for (double beta : {0.1, 1e-3, 1e-6, 1e-9, 1e-12}) {
      for (int d : {1, 2, 12, 50, 200}) {
        EXPECT_GE(explicit_bound(p, beta, d), min_scenarios(p, beta, d));
      }
    }
  }
}

TEST(DecisionCount, Formula) { EXPECT_EQ(decision_count(1, 10), 12); }

TEST(MinScenarios, ReliabilityLevelsOfTheBenchmark) {
  // Exact minimal counts for d = 12, beta = 1e-9 (checked against the
  // long-double oracle above and a 50-digit computation).
  EXPECT_EQ(min_scenarios(0.05, 1e-9, 12), 23);
  EXPECT_EQ(min_scenarios(0.30, 1e-9, 12), 44);
  EXPECT_EQ(min_scenarios(0.60, 1e-9, 12), 95);
  EXPECT_EQ(min_scenarios(0.95, 1e-9, 12), 893);
  // 890 scenarios leave the tail just above 1e-9.
  EXPECT_NEAR(std::exp(log_phi(0.95, 12, 890)), 1.0891074590712650e-9, 1e-20);
}
