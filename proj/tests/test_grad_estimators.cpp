#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "varpg/errors.hpp"
#include "varpg/grad_estimators.hpp"
#include "varpg/verification.hpp"

using namespace varpg;

namespace {

// batch with unit-basis trajectory scores, param_dim = n
GradientBatch basis_batch(std::initializer_list<double> returns) {
  GradientBatch b;
  b.returns = returns;
  b.param_dim = b.returns.size();
  for (std::size_t i = 0; i < b.returns.size(); ++i) {
    Vec omega(b.param_dim, 0.0);
    omega[i] = 1.0;
    b.scores.push_back(omega);
  }
  return b;
}

DoubleSamplingSplit half_split(std::size_t n) {
  DoubleSamplingSplit s;
  for (std::size_t i = 0; i < n / 2; ++i) s.set_a.push_back(i);
  for (std::size_t i = n / 2; i < n; ++i) s.set_b.push_back(i);
  return s;
}

bool bitwise_equal(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

constexpr QuantileMethod kLower = QuantileMethod::LowerOrderStat;

}  // namespace

TEST_CASE("gini gradient frozen two-sample case") {
  // returns [0,1]: eta_0 = 2 max(1,0) - (1+0) = 1, eta_1 = 2 - 2 = 0
  GradientBatch b = basis_batch({0.0, 1.0});
  const GradientEstimate e = grad_gini(b);
  CHECK(e.grad[0] == doctest::Approx(0.5));
  CHECK(e.grad[1] == doctest::Approx(0.0));
  CHECK(e.aux.at("b") == 1.0);

  // identical returns annihilate
  GradientBatch c = basis_batch({2.0, 2.0, 2.0});
  for (double g : grad_gini(c).grad) CHECK(g == 0.0);

  GradientBatch single = basis_batch({1.0});
  CHECK_THROWS_AS(grad_gini(single), invalid_input);
}

TEST_CASE("mmd gradient frozen three-sample case") {
  // returns [0,1,2], lower median 1, b = 2; indicator sets {0,1} and {1,2};
  // below-term coefficients (2q-r-b): r=0 -> 0, r=1 -> -1;
  // above-term coefficients -(b-r): r=1 -> -1, r=2 -> 0
  GradientBatch b = basis_batch({0.0, 1.0, 2.0});
  const GradientEstimate e = grad_mmd(b, kLower);
  CHECK(e.grad[0] == doctest::Approx(0.0));
  CHECK(e.grad[1] == doctest::Approx(-2.0 / 3.0));
  CHECK(e.grad[2] == doctest::Approx(0.0));
  CHECK(e.aux.at("q_half") == 1.0);

  GradientBatch c = basis_batch({4.0, 4.0});
  for (double g : grad_mmd(c, kLower).grad) CHECK(g == 0.0);
}

TEST_CASE("variance / mean-dev / semivar frozen four-sample cases") {
  GradientBatch b = basis_batch({0.0, 1.0, 2.0, 3.0});
  const DoubleSamplingSplit split = half_split(4);

  // mean_B = 2.5; A-terms (1/2)(R^2 - 2*2.5*R) on basis coords
  const GradientEstimate var = grad_variance(b, split);
  CHECK(var.grad[0] == doctest::Approx(0.0));
  CHECK(var.grad[1] == doctest::Approx(-2.0));
  CHECK(var.grad[2] == doctest::Approx(0.0));
  CHECK(var.grad[3] == doctest::Approx(0.0));

  // eta = (-1, +1) on A, sign average 0 kills the mean-gradient term
  const GradientEstimate md = grad_mean_dev(b, split);
  CHECK(md.grad[0] == doctest::Approx(0.5));
  CHECK(md.grad[1] == doctest::Approx(0.5));
  CHECK(md.grad[2] == doctest::Approx(0.0));
  CHECK(md.grad[3] == doctest::Approx(0.0));

  // downside gap only at R=0; coeff_avg = 1 pulls in the B mean gradient
  const GradientEstimate sv = grad_semivar(b, split);
  CHECK(sv.grad[0] == doctest::Approx(0.5));
  CHECK(sv.grad[1] == doctest::Approx(0.0));
  CHECK(sv.grad[2] == doctest::Approx(1.0));
  CHECK(sv.grad[3] == doctest::Approx(1.5));
}

TEST_CASE("cvar deviation gradient frozen case and constant-batch reduction") {
  GradientBatch b = basis_batch({0.0, 1.0, 2.0, 3.0});
  const GradientEstimate e = grad_cvar_dev(b, 0.5, kLower);
  CHECK(e.grad[0] == doctest::Approx(0.5));
  CHECK(e.grad[1] == doctest::Approx(0.25));
  CHECK(e.grad[2] == doctest::Approx(0.5));
  CHECK(e.grad[3] == doctest::Approx(0.75));

  // identical returns: deviation term vanishes, full gradient is the plain mean
  GradientBatch c = basis_batch({5.0, 5.0, 5.0});
  CHECK(bitwise_equal(grad_cvar_dev(c, 0.3, kLower).grad, grad_mean_plain(c).grad));
}

TEST_CASE("degenerate-scale errors and annihilation") {
  GradientBatch c = basis_batch({1.0, 1.0, 1.0, 1.0});
  const DoubleSamplingSplit split = half_split(4);
  CHECK_THROWS_AS(grad_std(c, split), degenerate_scale_error);
  CHECK_THROWS_AS(grad_semistd(c, split), degenerate_scale_error);
  CHECK_THROWS_AS(grad_iqr(c, 0.75, kLower), degenerate_scale_error);

  for (double g : grad_gini(c).grad) CHECK(g == 0.0);
  for (double g : grad_mmd(c, kLower).grad) CHECK(g == 0.0);
  for (double g : grad_variance(c, split).grad) CHECK(g == 0.0);
  for (double g : grad_mean_dev(c, split).grad) CHECK(g == 0.0);
  for (double g : grad_semivar(c, split).grad) CHECK(g == 0.0);
}

TEST_CASE("zero scores annihilate every estimator") {
  GradientBatch b;
  b.returns = {0.0, 1.5, -2.0, 3.0, 0.5, 2.5};
  b.param_dim = 3;
  b.scores.assign(6, Vec(3, 0.0));
  const DoubleSamplingSplit split = half_split(6);
  for (double g : grad_gini(b).grad) CHECK(g == 0.0);
  for (double g : grad_mmd(b, kLower).grad) CHECK(g == 0.0);
  for (double g : grad_variance(b, split).grad) CHECK(g == 0.0);
  for (double g : grad_std(b, split).grad) CHECK(g == 0.0);
  for (double g : grad_mean_dev(b, split).grad) CHECK(g == 0.0);
  for (double g : grad_semivar(b, split).grad) CHECK(g == 0.0);
  for (double g : grad_semistd(b, split).grad) CHECK(g == 0.0);
  for (double g : grad_iqr(b, 0.75, kLower).grad) CHECK(g == 0.0);
  for (double g : grad_cvar_dev(b, 0.25, kLower).grad) CHECK(g == 0.0);
  for (double g : grad_mean_plain(b).grad) CHECK(g == 0.0);
}

TEST_CASE("mean reinforce gradient") {
  GradientBatch b;
  b.param_dim = 4;
  b.returns = {1.0, 2.0};
  b.scores.assign(2, Vec(4, 0.0));
  b.step_terms.emplace();
  GradientBatch::StepTerms t0;
  t0.scores.push_back({{0}, {1.0}});
  t0.scores.push_back({{1}, {1.0}});
  t0.rewards_to_go = {3.0, 2.0};
  GradientBatch::StepTerms t1;
  t1.scores.push_back({{2}, {2.0}});
  t1.rewards_to_go = {5.0};
  b.step_terms->push_back(t0);
  b.step_terms->push_back(t1);

  SUBCASE("baselines equal rewards-to-go cancel exactly") {
    const std::vector<std::vector<double>> base = {{3.0, 2.0}, {5.0}};
    for (double g : grad_mean_reinforce(b, base, 0.9).grad) CHECK(g == 0.0);
  }
  SUBCASE("gamma discounting and averaging") {
    const std::vector<std::vector<double>> zeros = {{0.0, 0.0}, {0.0}};
    const GradientEstimate e = grad_mean_reinforce(b, zeros, 0.5);
    CHECK(e.grad[0] == doctest::Approx(0.5 * 3.0));
    CHECK(e.grad[1] == doctest::Approx(0.5 * 0.5 * 2.0));
    CHECK(e.grad[2] == doctest::Approx(0.5 * 2.0 * 5.0));
    CHECK(e.grad[3] == 0.0);
  }
  SUBCASE("missing step terms rejected") {
    GradientBatch plain = basis_batch({1.0, 2.0});
    CHECK_THROWS_AS(grad_mean_reinforce(plain, {{0.0}, {0.0}}, 1.0), invalid_input);
  }
}

TEST_CASE("split double sampling") {
  Rng rng(5);
  const DoubleSamplingSplit s2 = split_double_sampling(2, rng);
  CHECK(s2.set_a.size() == 1);
  CHECK(s2.set_b.size() == 1);
  const DoubleSamplingSplit s5 = split_double_sampling(5, rng);
  CHECK(s5.set_a.size() == 2);
  CHECK(s5.set_b.size() == 3);
  CHECK_THROWS_AS(split_double_sampling(1, rng), invalid_input);

  // uniform over the 6 possible A-sets at n=4: chi-square above p = 0.01
  std::map<std::vector<std::size_t>, int> counts;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) counts[split_double_sampling(4, rng).set_a]++;
  CHECK(counts.size() == 6);
  double chi2 = 0.0;
  const double expected = draws / 6.0;
  for (const auto& [key, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 15.086);  // df = 5 critical value at 0.01
}

TEST_CASE("is-ratio neutrality is bitwise") {
  GradientBatch plain;
  plain.returns = {0.25, -1.5, 3.0, 2.25, -0.5, 1.75};
  plain.param_dim = 3;
  Rng rng(17);
  for (std::size_t i = 0; i < 6; ++i) {
    Vec omega(3);
    for (double& v : omega) v = rng.normal();
    plain.scores.push_back(omega);
  }
  GradientBatch unit = plain;
  unit.is_ratios = std::vector<double>(6, 1.0);
  const DoubleSamplingSplit split = half_split(6);

  CHECK(bitwise_equal(grad_gini(plain).grad, grad_gini(unit).grad));
  CHECK(bitwise_equal(grad_mean_plain(plain).grad, grad_mean_plain(unit).grad));
  CHECK(bitwise_equal(grad_variance(plain, split).grad, grad_variance(unit, split).grad));
  CHECK(bitwise_equal(grad_std(plain, split).grad, grad_std(unit, split).grad));
  CHECK(bitwise_equal(grad_mean_dev(plain, split).grad, grad_mean_dev(unit, split).grad));
  CHECK(bitwise_equal(grad_semivar(plain, split).grad, grad_semivar(unit, split).grad));
  CHECK(bitwise_equal(grad_semistd(plain, split).grad, grad_semistd(unit, split).grad));
  // quantile-based estimators: exact under the lower-order-statistic rule
  CHECK(bitwise_equal(grad_mmd(plain, kLower).grad, grad_mmd(unit, kLower).grad));
  CHECK(bitwise_equal(grad_cvar_dev(plain, 0.3, kLower).grad,
                      grad_cvar_dev(unit, 0.3, kLower).grad));
  CHECK(bitwise_equal(grad_iqr(plain, 0.75, kLower).grad, grad_iqr(unit, 0.75, kLower).grad));
}

TEST_CASE("score linearity is exact under power-of-two scaling") {
  GradientBatch one;
  one.returns = {1.0, -2.0, 0.5, 3.25, 2.0, -1.0};
  one.param_dim = 2;
  Rng rng(23);
  for (std::size_t i = 0; i < 6; ++i) {
    Vec omega(2);
    for (double& v : omega) v = rng.normal();
    one.scores.push_back(omega);
  }
  GradientBatch two = one;
  for (Vec& s : two.scores) scale(s, 2.0);
  const DoubleSamplingSplit split = half_split(6);

  const auto check_double = [&](const Vec& g1, const Vec& g2) {
    REQUIRE(g1.size() == g2.size());
    for (std::size_t d = 0; d < g1.size(); ++d) CHECK(g2[d] == 2.0 * g1[d]);
  };
  check_double(grad_gini(one).grad, grad_gini(two).grad);
  check_double(grad_mmd(one, kLower).grad, grad_mmd(two, kLower).grad);
  check_double(grad_variance(one, split).grad, grad_variance(two, split).grad);
  check_double(grad_mean_dev(one, split).grad, grad_mean_dev(two, split).grad);
  check_double(grad_semivar(one, split).grad, grad_semivar(two, split).grad);
  check_double(grad_cvar_dev(one, 0.25, kLower).grad, grad_cvar_dev(two, 0.25, kLower).grad);
  check_double(grad_iqr(one, 0.8, kLower).grad, grad_iqr(two, 0.8, kLower).grad);
}

TEST_CASE("combined objective gradient") {
  GradientBatch b = basis_batch({0.0, 1.0, 2.0, 3.0});
  b.step_terms.emplace();
  for (std::size_t i = 0; i < 4; ++i) {
    GradientBatch::StepTerms t;
    t.scores.push_back({{static_cast<std::uint32_t>(i)}, {1.0}});
    t.rewards_to_go = {b.returns[i]};
    b.step_terms->push_back(t);
  }
  const std::vector<std::vector<double>> baselines(4, std::vector<double>{0.0});

  SUBCASE("lambda zero is exactly the mean gradient") {
    Rng rng(3);
    CombinedConfig cc;
    cc.baselines = &baselines;
    cc.rng = &rng;
    const GradientEstimate combined =
        combined_objective_gradient(MetricKind::make(Metric::GiniDev), b, 0.0, cc);
    const GradientEstimate mean = grad_mean_reinforce(b, baselines, cc.gamma);
    CHECK(bitwise_equal(combined.grad, mean.grad));
    CHECK(combined.aux.at("variability_norm") == 0.0);
  }
  SUBCASE("contributions average to the gradient") {
    Rng rng(3);
    CombinedConfig cc;
    cc.baselines = &baselines;
    cc.rng = &rng;
    const GradientEstimate combined =
        combined_objective_gradient(MetricKind::make(Metric::MeanDev), b, 0.7, cc);
    Vec mean(b.param_dim, 0.0);
    for (const Vec& c : combined.per_trajectory) axpy(0.25, c, mean);
    for (std::size_t d = 0; d < mean.size(); ++d)
      CHECK(mean[d] == doctest::Approx(combined.grad[d]).epsilon(1e-12));
    CHECK(combined.aux.at("grad_variance_diag") >= 0.0);
  }
  SUBCASE("degenerate scale downgrades to the mean term") {
    GradientBatch c = basis_batch({2.0, 2.0, 2.0, 2.0});
    c.step_terms = b.step_terms;
    Rng rng(3);
    CombinedConfig cc;
    cc.baselines = &baselines;
    cc.rng = &rng;
    const GradientEstimate combined =
        combined_objective_gradient(MetricKind::make(Metric::Std), c, 1.0, cc);
    CHECK(combined.aux.at("degenerate_downgrade") == 1.0);
    const GradientEstimate mean = grad_mean_reinforce(c, baselines, cc.gamma);
    CHECK(bitwise_equal(combined.grad, mean.grad));
  }
}

TEST_CASE("bandit unbiasedness spot checks") {
  // quick 3-SE level versions; the acceptance suite runs the full protocol
  const DiscreteMdp bandit = make_bernoulli_bandit();
  const OraclePolicy policy = make_softmax_oracle_policy(1, 2);
  const Vec theta = {0.0, 1.0};  // p ~= 0.731
  Rng rng(29);
  const std::size_t reps = 40000, n = 8;

  const auto run = [&](const MetricKind& kind, auto&& estimator) {
    const Vec oracle = finite_diff_gradient(kind, bandit, policy, theta);
    Vec sum(2, 0.0), sum_sq(2, 0.0);
    for (std::size_t r = 0; r < reps; ++r) {
      const GradientBatch batch = sample_gradient_batch(bandit, policy, theta, n, rng);
      const Vec g = estimator(batch).grad;
      for (int d = 0; d < 2; ++d) {
        sum[d] += g[d];
        sum_sq[d] += g[d] * g[d];
      }
    }
    const double nr = static_cast<double>(reps);
    for (int d = 0; d < 2; ++d) {
      const double mean = sum[d] / nr;
      const double var = sum_sq[d] / nr - mean * mean;
      const double se = std::sqrt(var / nr);
      CHECK(std::abs(mean - oracle[d]) < 3.5 * se);  // slightly loose spot check
    }
  };
  run(MetricKind::make(Metric::GiniDev),
      [](const GradientBatch& batch) { return grad_gini(batch, 1.0); });
  Rng split_rng(31);
  run(MetricKind::make(Metric::Variance), [&split_rng](const GradientBatch& batch) {
    return grad_variance(batch, split_double_sampling(batch.size(), split_rng));
  });
}

TEST_CASE("gini batch-max bound carries the predicted plug-in bias") {
  // With b = batch max, batches that never draw the top return miss the true
  // bound; at p = 1/2, n = 4 the bias is (1-p)^n * p per coordinate.
  const DiscreteMdp bandit = make_bernoulli_bandit();
  const OraclePolicy policy = make_softmax_oracle_policy(1, 2);
  const Vec theta = {0.0, 0.0};
  Rng rng(37);
  const std::size_t reps = 60000, n = 4;
  double sum0_plug = 0.0, sum0_exact = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    const GradientBatch batch = sample_gradient_batch(bandit, policy, theta, n, rng);
    sum0_plug += grad_gini(batch).grad[0];
    sum0_exact += grad_gini(batch, 1.0).grad[0];
  }
  const double nr = static_cast<double>(reps);
  const double oracle0 =
      finite_diff_gradient(MetricKind::make(Metric::GiniDev), bandit, policy, theta)[0];
  CHECK(std::abs(sum0_exact / nr - oracle0) < 0.005);
  CHECK(std::abs(sum0_plug / nr - oracle0) ==
        doctest::Approx(0.5 * std::pow(0.5, n)).epsilon(0.25));
}

TEST_CASE("batch validation errors") {
  GradientBatch b = basis_batch({1.0, 2.0});
  b.is_ratios = std::vector<double>{1.0};
  CHECK_THROWS_AS(b.validate(), invalid_input);
  b.is_ratios = std::vector<double>{1.0, 0.0};
  CHECK_THROWS_AS(b.validate(), invalid_input);
  b.is_ratios.reset();
  b.scores.pop_back();
  CHECK_THROWS_AS(b.validate(), invalid_input);

  GradientBatch ok = basis_batch({1.0, 2.0, 3.0, 4.0});
  DoubleSamplingSplit bad;
  bad.set_a = {0};
  bad.set_b = {1, 2, 3};
  CHECK_THROWS_AS(grad_mean_dev(ok, bad), invalid_input);  // singleton A
  CHECK_THROWS_AS(grad_semivar(ok, bad), invalid_input);
  DoubleSamplingSplit overlap;
  overlap.set_a = {0, 1};
  overlap.set_b = {1, 2, 3};
  CHECK_THROWS_AS(grad_variance(ok, overlap), invalid_input);
}
