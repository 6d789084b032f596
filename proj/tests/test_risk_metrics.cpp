#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "varpg/errors.hpp"
#include "varpg/risk_metrics.hpp"
#include "varpg/rng.hpp"

using namespace varpg;

namespace {

SampleBatch batch(std::initializer_list<double> values) {
  SampleBatch b;
  b.values = values;
  return b;
}

SampleBatch wbatch(std::initializer_list<double> values, std::initializer_list<double> weights) {
  SampleBatch b;
  b.values = values;
  b.weights = std::vector<double>(weights);
  return b;
}

MetricKind kind(Metric m, std::optional<double> alpha = std::nullopt) {
  return MetricKind::make(m, alpha);
}

constexpr QuantileMethod kLower = QuantileMethod::LowerOrderStat;
constexpr QuantileMethod kLinear = QuantileMethod::LinearInterpolation;

}  // namespace

TEST_CASE("empirical quantile conventions") {
  CHECK(empirical_quantile(batch({5.0}), 0.25, kLower) == 5.0);
  CHECK(empirical_quantile(batch({5.0}), 0.9, kLinear) == 5.0);
  CHECK(empirical_quantile(batch({1, 2, 3, 4}), 0.5, kLower) == 2.0);
  CHECK(empirical_quantile(batch({1, 2, 3, 4}), 0.5, kLinear) == doctest::Approx(2.5));
  CHECK(empirical_quantile(batch({3, 1, 4, 2}), 0.5, kLower) == 2.0);  // order-free
  CHECK_THROWS_AS(empirical_quantile(batch({}), 0.5, kLower), invalid_input);
  CHECK_THROWS_AS(empirical_quantile(wbatch({1, 2}, {1, 1}), 0.5, kLower), invalid_input);
}

TEST_CASE("weighted quantile grid") {
  CHECK(weighted_quantile(wbatch({0, 10}, {0.9, 0.1}), 0.5) == 0.0);
  // golden: cumulative grid (0.5, 1.0), interpolate at 0.75
  CHECK(weighted_quantile(wbatch({0, 10}, {0.5, 0.5}), 0.75) == doctest::Approx(5.0));
  CHECK_THROWS_AS(weighted_quantile(wbatch({0, 10}, {0.0, 0.0}), 0.5), invalid_input);

  // uniform weights reduce to the same cumulative-grid interpolation
  SampleBatch u = wbatch({1, 2, 3, 4}, {1, 1, 1, 1});
  // grid 0.25,0.5,0.75,1.0; at 0.5 exactly the second sample
  CHECK(weighted_quantile(u, 0.5) == doctest::Approx(2.0));
  CHECK(weighted_quantile_lower(u, 0.5) == 2.0);
}

TEST_CASE("metric point values on [0,1]") {
  const SampleBatch b01 = batch({0.0, 1.0});
  CHECK(empirical_metric(kind(Metric::GiniDev), b01, kLower) == doctest::Approx(0.25));
  CHECK(empirical_metric(kind(Metric::Variance), b01, kLower) == doctest::Approx(0.25));
  CHECK(empirical_metric(kind(Metric::MeanDev), b01, kLower) == doctest::Approx(0.5));
  CHECK(empirical_metric(kind(Metric::SemiVar), b01, kLower) == doctest::Approx(0.125));
  CHECK(empirical_metric(kind(Metric::SemiStd), b01, kLower) ==
        doctest::Approx(std::sqrt(0.125)));
  CHECK(empirical_metric(kind(Metric::Std), b01, kLower) == doctest::Approx(0.5));
}

TEST_CASE("gini on identical samples vanishes") {
  CHECK(empirical_metric(kind(Metric::GiniDev), batch({3.5, 3.5, 3.5}), kLower) == 0.0);
}

TEST_CASE("iqr and cvar deviation examples") {
  CHECK(empirical_metric(kind(Metric::Iqr, 0.75), batch({1, 2, 3, 4}), kLinear) ==
        doctest::Approx(1.5));
  CHECK(empirical_metric(kind(Metric::CVaRDev, 0.5), batch({1, 2, 3, 4}), kLower) ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(empirical_metric(kind(Metric::Iqr, 0.75), batch({}), kLinear), invalid_input);
  CHECK_THROWS_AS(MetricKind::make(Metric::Iqr, 0.3), invalid_input);
  CHECK_THROWS_AS(MetricKind::make(Metric::CVaRDev, 1.5), invalid_input);
  CHECK_THROWS_AS(MetricKind::make(Metric::Iqr), invalid_input);
}

TEST_CASE("table flags") {
  CHECK(kind(Metric::CVaRDev, 0.2).coherent());
  CHECK_FALSE(kind(Metric::CVaRDev, 0.2).pg_unbiased());
  CHECK(kind(Metric::GiniDev).pg_unbiased());
  CHECK_FALSE(kind(Metric::GiniDev).pg_double_sampling());
  CHECK_FALSE(kind(Metric::Iqr, 0.9).coherent());
  CHECK(kind(Metric::MeanDev).pg_double_sampling());
  CHECK_FALSE(kind(Metric::MeanMedianDev).coherent());
  CHECK(kind(Metric::Variance).pg_unbiased());
  CHECK_FALSE(kind(Metric::Variance).coherent());
  CHECK(kind(Metric::Std).coherent());
  CHECK_FALSE(kind(Metric::SemiVar).coherent());
  CHECK(kind(Metric::SemiVar).pg_double_sampling());
  CHECK(kind(Metric::SemiStd).coherent());
}

TEST_CASE("kde density") {
  // symmetric two-point batch: both kernels contribute equally at 0
  const SampleBatch sym = batch({-1.0, 1.0});
  const double at0 = kde_density_at(sym, 0.0);
  const double n = 2.0, sd = std::sqrt(2.0);
  const double h = sd * std::pow(0.75 * n, -0.2);
  const double expected = std::exp(-0.5 / (h * h)) / (h * std::sqrt(6.283185307179586));
  CHECK(at0 == doctest::Approx(expected).epsilon(1e-12));
  CHECK(at0 > 0.0);

  CHECK_THROWS_AS(kde_density_at(batch({0, 0, 0}), 0.0), degenerate_density_error);
  CHECK_THROWS_AS(kde_density_at(batch({1.0}), 0.0), invalid_input);

  // large standard-normal sample: density at 0 within 5% of 1/sqrt(2 pi)
  Rng rng(7);
  SampleBatch big;
  for (int i = 0; i < 10000; ++i) big.values.push_back(rng.normal());
  CHECK(kde_density_at(big, 0.0) == doctest::Approx(0.3989422804).epsilon(0.05));
}

TEST_CASE("atom distribution ground truths") {
  AtomDistribution single;
  single.atoms = {{2.0, 1.0}};
  for (Metric m : {Metric::Variance, Metric::GiniDev, Metric::MeanDev, Metric::MeanMedianDev,
                   Metric::Std, Metric::SemiVar, Metric::SemiStd})
    CHECK(exact_metric_on_atoms(kind(m), single, kLower) == doctest::Approx(0.0));

  AtomDistribution bern;
  const double p = 0.3;
  bern.atoms = {{0.0, 1.0 - p}, {1.0, p}};
  CHECK(exact_metric_on_atoms(kind(Metric::GiniDev), bern, kLower) ==
        doctest::Approx(p * (1.0 - p)));
  CHECK(exact_metric_on_atoms(kind(Metric::MeanDev), bern, kLower) ==
        doctest::Approx(2.0 * p * (1.0 - p)));
  CHECK(exact_metric_on_atoms(kind(Metric::Variance), bern, kLower) ==
        doctest::Approx(p * (1.0 - p)));
  CHECK(exact_metric_on_atoms(kind(Metric::SemiVar), bern, kLower) ==
        doctest::Approx(p * p * (1.0 - p)));

  AtomDistribution half;
  half.atoms = {{0.0, 0.5}, {1.0, 0.5}};
  const SampleBatch b01 = batch({0.0, 1.0});
  for (Metric m : {Metric::Variance, Metric::GiniDev, Metric::MeanDev, Metric::MeanMedianDev,
                   Metric::Std, Metric::SemiVar, Metric::SemiStd})
    CHECK(exact_metric_on_atoms(kind(m), half, kLower) ==
          doctest::Approx(empirical_metric(kind(m), b01, kLower)).epsilon(1e-12));

  AtomDistribution bad;
  bad.atoms = {{0.0, 0.6}, {1.0, 0.6}};
  CHECK_THROWS_AS(exact_metric_on_atoms(kind(Metric::Variance), bad, kLower), invalid_input);
}

TEST_CASE("gini double sum equals sorted prefix form") {
  Rng rng(11);
  for (int it = 0; it < 50; ++it) {
    SampleBatch b;
    std::vector<double> w;
    const std::size_t n = 2 + rng.uniform_int(20);
    for (std::size_t i = 0; i < n; ++i) {
      b.values.push_back(3.0 * rng.normal());
      w.push_back(rng.uniform_pos());
    }
    if (it % 2) b.weights = w;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += b.weights ? (*b.weights)[i] : 1.0;
    double naive = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double pi = (b.weights ? (*b.weights)[i] : 1.0) / total;
        const double pj = (b.weights ? (*b.weights)[j] : 1.0) / total;
        naive += 0.5 * pi * pj * std::abs(b.values[i] - b.values[j]);
      }
    CHECK(empirical_metric(kind(Metric::GiniDev), b, kLower) ==
          doctest::Approx(naive).epsilon(1e-10));
  }
}

TEST_CASE("empirical cvar matches tail integral with ties") {
  // quantile staircase: F^{-1} = 1 on (0, 2/3], 2 on (2/3, 1]
  const SampleBatch b = batch({1.0, 1.0, 2.0});
  CHECK(empirical_cvar_lower(b, 0.5) == doctest::Approx(1.0));
  CHECK(empirical_cvar_lower(b, 0.75) == doctest::Approx((2.0 / 3.0 + (0.75 - 2.0 / 3.0) * 2.0) / 0.75));
}

TEST_CASE("upper cvar deviation") {
  const SampleBatch b = batch({1, 2, 3, 4});
  // upper tail at alpha=0.5: mean of top half = 3.5; mean = 2.5
  CHECK(upper_cvar_deviation(b, 0.5) == doctest::Approx(1.0));
}

TEST_CASE("choquet forms agree with direct definitions") {
  Rng rng(13);
  for (int it = 0; it < 200; ++it) {
    AtomDistribution dist;
    const std::size_t m = 1 + rng.uniform_int(50);
    double total = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      dist.atoms.push_back({5.0 * rng.normal(), rng.uniform_pos()});
      total += dist.atoms.back().probability;
    }
    for (auto& a : dist.atoms) a.probability /= total;
    const double gd = exact_metric_on_atoms(kind(Metric::GiniDev), dist, kLower);
    const double mmd = exact_metric_on_atoms(kind(Metric::MeanMedianDev), dist, kLower);
    CHECK(gini_dev_quantile_form(dist) == doctest::Approx(gd).epsilon(1e-10));
    CHECK(mmd_quantile_form(dist) == doctest::Approx(mmd).epsilon(1e-10));
  }
}

TEST_CASE("batch validation") {
  CHECK_THROWS_AS(batch({}).validate(), invalid_input);
  SampleBatch nan;
  nan.values = {0.0, std::nan("")};
  CHECK_THROWS_AS(nan.validate(), invalid_input);
  CHECK_THROWS_AS(wbatch({1, 2}, {1, -1}).validate(), invalid_input);
  CHECK_THROWS_AS(wbatch({1, 2}, {0, 0}).validate(), invalid_input);
  CHECK_NOTHROW(wbatch({1, 2}, {0, 1}).validate());
}
