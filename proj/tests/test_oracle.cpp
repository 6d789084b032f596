#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "varpg/errors.hpp"
#include "varpg/oracle.hpp"
#include "varpg/risk_metrics.hpp"
#include "varpg/verification.hpp"

using namespace varpg;

TEST_CASE("bandit enumeration matches the softmax law") {
  const DiscreteMdp bandit = make_bernoulli_bandit();
  const OraclePolicy policy = make_softmax_oracle_policy(1, 2);
  const Vec theta = {0.0, 0.8};
  const AtomDistribution dist = enumerate_return_distribution(bandit, policy, theta);
  REQUIRE(dist.atoms.size() == 2);
  const double p = policy.probs(theta, 0)[1];
  CHECK(dist.atoms[0].value == 0.0);
  CHECK(dist.atoms[1].value == 1.0);
  CHECK(dist.atoms[0].probability == doctest::Approx(1.0 - p).epsilon(1e-14));
  CHECK(dist.atoms[1].probability == doctest::Approx(p).epsilon(1e-14));
}

TEST_CASE("two-step chain with binary noise yields product atoms") {
  DiscreteMdp chain;
  chain.n_states = 2;
  chain.n_actions = 1;
  chain.horizon = 2;
  chain.gamma = 0.5;
  chain.outcomes.assign(2, std::vector<std::vector<DiscreteMdp::Outcome>>(1));
  chain.outcomes[0][0] = {{0.25, 1, -2.0, false}, {0.75, 1, 0.0, false}};
  chain.outcomes[1][0] = {{0.5, 1, 2.0, true}, {0.5, 1, 4.0, true}};
  const OraclePolicy policy = make_softmax_oracle_policy(2, 1);
  const AtomDistribution dist = enumerate_return_distribution(chain, policy, {0.0, 0.0});
  REQUIRE(dist.atoms.size() == 4);
  // atoms: -2 + 0.5*{2,4} = {-1, 0}; 0 + 0.5*{2,4} = {1, 2}
  CHECK(dist.atoms[0].value == doctest::Approx(-1.0));
  CHECK(dist.atoms[0].probability == doctest::Approx(0.125));
  CHECK(dist.atoms[1].value == doctest::Approx(0.0));
  CHECK(dist.atoms[1].probability == doctest::Approx(0.125));
  CHECK(dist.atoms[2].value == doctest::Approx(1.0));
  CHECK(dist.atoms[2].probability == doctest::Approx(0.375));
  CHECK(dist.atoms[3].value == doctest::Approx(2.0));
  CHECK(dist.atoms[3].probability == doctest::Approx(0.375));
}

TEST_CASE("budget guard") {
  const DiscreteMdp bandit = make_smoothed_bandit(101);
  const OraclePolicy policy = make_softmax_oracle_policy(1, 2);
  CHECK_THROWS_AS(enumerate_return_distribution(bandit, policy, {0.0, 0.0}, 100),
                  oracle_budget_error);
}

TEST_CASE("finite differences recover closed-form bandit gradients") {
  const DiscreteMdp bandit = make_bernoulli_bandit();
  const OraclePolicy policy = make_softmax_oracle_policy(1, 2);
  const Vec theta = {0.0, 0.6};
  const double p = policy.probs(theta, 0)[1];
  const double dp1 = p * (1.0 - p);  // dp/dtheta_1; dp/dtheta_0 = -dp1

  SUBCASE("gini: GD = p(1-p)") {
    const Vec g = finite_diff_gradient(MetricKind::make(Metric::GiniDev), bandit, policy, theta);
    CHECK(g[1] == doctest::Approx((1.0 - 2.0 * p) * dp1).epsilon(1e-6));
    CHECK(g[0] == doctest::Approx(-(1.0 - 2.0 * p) * dp1).epsilon(1e-6));
  }
  SUBCASE("variance matches the same closed form") {
    const Vec g = finite_diff_gradient(MetricKind::make(Metric::Variance), bandit, policy, theta);
    CHECK(g[1] == doctest::Approx((1.0 - 2.0 * p) * dp1).epsilon(1e-6));
  }
  SUBCASE("mean deviation: MD = 2p(1-p)") {
    const Vec g = finite_diff_gradient(MetricKind::make(Metric::MeanDev), bandit, policy, theta);
    CHECK(g[1] == doctest::Approx(2.0 * (1.0 - 2.0 * p) * dp1).epsilon(1e-6));
  }
  SUBCASE("semi-variance: SV = p^2 (1-p)") {
    const Vec g = finite_diff_gradient(MetricKind::make(Metric::SemiVar), bandit, policy, theta);
    CHECK(g[1] == doctest::Approx((2.0 * p - 3.0 * p * p) * dp1).epsilon(1e-6));
  }
  SUBCASE("constant-return mdp has zero gradient") {
    DiscreteMdp det;
    det.n_states = 1;
    det.n_actions = 2;
    det.horizon = 1;
    det.outcomes.assign(1, std::vector<std::vector<DiscreteMdp::Outcome>>(2));
    det.outcomes[0][0] = {{1.0, 0, 3.0, true}};
    det.outcomes[0][1] = {{1.0, 0, 3.0, true}};
    const Vec g = finite_diff_gradient(MetricKind::make(Metric::GiniDev), det, policy, theta);
    CHECK(g[0] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(g[1] == doctest::Approx(0.0).epsilon(1e-10));
  }
}

TEST_CASE("monte carlo mean matches the enumerated mean") {
  const DiscreteMdp bandit = make_bernoulli_bandit();
  const OraclePolicy policy = make_softmax_oracle_policy(1, 2);
  const Vec theta = {0.0, 0.3};
  Rng rng(41);
  const std::size_t reps = 200000;
  const double mc = monte_carlo_mean_return(bandit, policy, theta, reps, rng);
  const double exact = enumerate_return_distribution(bandit, policy, theta).mean();
  const double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(reps));
  CHECK(std::abs(mc - exact) < 3.0 * se);
}

TEST_CASE("bias curve and slope fit") {
  // synthetic estimator with known bias c / sqrt(n): slope must be ~ -0.5
  const DiscreteMdp bandit = make_bernoulli_bandit();
  const OraclePolicy policy = make_softmax_oracle_policy(1, 2);
  const Vec theta = {0.0, 0.0};
  Rng rng(43);
  const auto estimator = [](const GradientBatch& batch, Rng&) {
    GradientEstimate e;
    const double bias = 1.0 / std::sqrt(static_cast<double>(batch.size()));
    e.grad = {bias, bias};
    return e;
  };
  const Vec oracle = {0.0, 0.0};
  const auto curve = estimator_bias_curve(estimator, bandit, policy, theta, oracle,
                                          {8, 32, 128, 512}, 200, rng);
  REQUIRE(curve.size() == 4);
  CHECK(log_log_slope(curve) == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(curve[0].bias == doctest::Approx(std::sqrt(2.0) / std::sqrt(8.0)));
}

TEST_CASE("mmd and cvar estimator bias shrinks with n (quick)") {
  const DiscreteMdp bandit = make_smoothed_bandit(101);
  const OraclePolicy policy = make_softmax_oracle_policy(1, 2);
  const Vec theta = {0.0, 0.4};
  Rng rng(47);

  const Vec mmd_oracle =
      finite_diff_gradient(MetricKind::make(Metric::MeanMedianDev), bandit, policy, theta);
  const auto mmd_est = [](const GradientBatch& b, Rng&) {
    return grad_mmd(b, QuantileMethod::LowerOrderStat);
  };
  const auto mmd_curve = estimator_bias_curve(mmd_est, bandit, policy, theta, mmd_oracle,
                                              {8, 256}, 4000, rng);
  CHECK(mmd_curve[1].bias < 0.5 * mmd_curve[0].bias);

  const Vec cvar_oracle =
      finite_diff_gradient(MetricKind::make(Metric::CVaRDev, 0.2), bandit, policy, theta);
  const auto cvar_est = [](const GradientBatch& b, Rng&) {
    return grad_cvar_dev(b, 0.2, QuantileMethod::LowerOrderStat);
  };
  const auto cvar_curve = estimator_bias_curve(cvar_est, bandit, policy, theta, cvar_oracle,
                                               {8, 256}, 4000, rng);
  CHECK(cvar_curve[1].bias < 0.5 * cvar_curve[0].bias);
}

TEST_CASE("iqr direction quick check") {
  const SuiteResult suite = run_iqr_direction_suite(20000, 51);
  for (const CheckResult& c : suite.checks) CHECK(c.pass);
}
