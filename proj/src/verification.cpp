#include "varpg/verification.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>

#include "varpg/errors.hpp"
#include "varpg/risk_metrics.hpp"
#include "varpg/softmax_policy.hpp"

namespace varpg {

namespace {

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return std::string(buf);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.7071067811865475244); }

}  // namespace

DiscreteMdp make_bernoulli_bandit() {
  DiscreteMdp mdp;
  mdp.n_states = 1;
  mdp.n_actions = 2;
  mdp.horizon = 1;
  mdp.outcomes.assign(1, std::vector<std::vector<DiscreteMdp::Outcome>>(2));
  mdp.outcomes[0][0] = {{1.0, 0, 0.0, true}};
  mdp.outcomes[0][1] = {{1.0, 0, 1.0, true}};
  return mdp;
}

DiscreteMdp make_smoothed_bandit(std::size_t points_per_arm) {
  DiscreteMdp mdp;
  mdp.n_states = 1;
  mdp.n_actions = 2;
  mdp.horizon = 1;
  mdp.outcomes.assign(1, std::vector<std::vector<DiscreteMdp::Outcome>>(2));
  const double mu[2] = {0.0, 1.0};
  const double sd[2] = {1.0, 1.3};
  for (int a = 0; a < 2; ++a) {
    std::vector<DiscreteMdp::Outcome> outs;
    double total = 0.0;
    for (std::size_t j = 0; j < points_per_arm; ++j) {
      const double z = -4.0 + 8.0 * static_cast<double>(j) / static_cast<double>(points_per_arm - 1);
      const double w = std::exp(-0.5 * z * z);
      outs.push_back({w, 0, mu[a] + sd[a] * z, true});
      total += w;
    }
    for (auto& o : outs) o.probability /= total;
    mdp.outcomes[0][a] = std::move(outs);
  }
  return mdp;
}

OraclePolicy make_softmax_oracle_policy(std::size_t n_states, std::size_t n_actions) {
  OraclePolicy p;
  p.param_dim = n_states * n_actions;
  p.probs = [n_states, n_actions](const Vec& theta, int state) {
    PolicyParams params{n_states, n_actions, theta};
    return action_probs(params, state);
  };
  p.score = [n_states, n_actions](const Vec& theta, int state, int action) {
    PolicyParams params{n_states, n_actions, theta};
    return grad_log_prob(params, state, action);
  };
  return p;
}

namespace {

struct MomentAccumulator {
  Vec sum, sum_sq;
  std::size_t count = 0;
  explicit MomentAccumulator(std::size_t dim) : sum(dim, 0.0), sum_sq(dim, 0.0) {}
  void add(const Vec& g) {
    for (std::size_t d = 0; d < g.size(); ++d) {
      sum[d] += g[d];
      sum_sq[d] += g[d] * g[d];
    }
    ++count;
  }
  double mean(std::size_t d) const { return sum[d] / static_cast<double>(count); }
  double se(std::size_t d) const {
    const double m = mean(d);
    const double var = std::max(0.0, sum_sq[d] / static_cast<double>(count) - m * m);
    return std::sqrt(var / static_cast<double>(count));
  }
};

using EstimatorFn = std::function<GradientEstimate(const GradientBatch&, Rng&)>;

// Monte Carlo mean of the estimator against the oracle gradient; passes when
// every coordinate sits within 3 standard errors.
CheckResult three_se_check(const std::string& name, const DiscreteMdp& mdp,
                           const OraclePolicy& policy, const Vec& theta,
                           const MetricKind& kind, const EstimatorFn& estimator,
                           std::size_t n, std::size_t reps, Rng& rng, bool gating) {
  const Vec oracle = finite_diff_gradient(kind, mdp, policy, theta);
  MomentAccumulator acc(theta.size());
  for (std::size_t r = 0; r < reps; ++r) {
    const GradientBatch batch = sample_gradient_batch(mdp, policy, theta, n, rng);
    acc.add(estimator(batch, rng).grad);
  }
  double worst_z = 0.0;
  bool pass = true;
  for (std::size_t d = 0; d < theta.size(); ++d) {
    const double err = acc.mean(d) - oracle[d];
    const double se = acc.se(d);
    if (se == 0.0) {
      if (err != 0.0) pass = false;
      continue;
    }
    worst_z = std::max(worst_z, std::abs(err) / se);
  }
  if (worst_z > 3.0) pass = false;
  CheckResult res;
  res.name = name;
  res.pass = pass;
  res.gating = gating;
  res.details = fmt("max |z| = %.2f over %zu reps (n=%zu)", worst_z, reps, n);
  return res;
}

}  // namespace

SuiteResult run_unbiasedness_suite(std::size_t reps, std::uint64_t seed) {
  SuiteResult suite{"unbiasedness", {}};
  const DiscreteMdp bandit = make_bernoulli_bandit();
  const OraclePolicy policy = make_softmax_oracle_policy(1, 2);
  const Vec theta_half = {0.0, 0.0};     // p = 1/2
  const Vec theta_generic = {0.0, 1.0};  // p ~= 0.731
  Rng rng(seed);

  const EstimatorFn gini = [](const GradientBatch& b, Rng&) { return grad_gini(b, 1.0); };
  const EstimatorFn variance = [](const GradientBatch& b, Rng& r) {
    return grad_variance(b, split_double_sampling(b.size(), r));
  };
  const EstimatorFn mean_dev = [](const GradientBatch& b, Rng& r) {
    return grad_mean_dev(b, split_double_sampling(b.size(), r));
  };
  const EstimatorFn semivar = [](const GradientBatch& b, Rng& r) {
    return grad_semivar(b, split_double_sampling(b.size(), r));
  };

  struct Row {
    const char* label;
    MetricKind kind;
    const EstimatorFn* fn;
  };
  const Row rows[] = {
      {"gini_dev", MetricKind::make(Metric::GiniDev), &gini},
      {"variance", MetricKind::make(Metric::Variance), &variance},
      {"mean_dev", MetricKind::make(Metric::MeanDev), &mean_dev},
      {"semi_var", MetricKind::make(Metric::SemiVar), &semivar},
  };
  for (const Row& row : rows) {
    for (std::size_t n : {std::size_t{4}, std::size_t{8}}) {
      Rng sub = rng.spawn(n);
      suite.checks.push_back(three_se_check(fmt("%s n=%zu p=0.5", row.label, n), bandit, policy,
                                            theta_half, row.kind, *row.fn, n, reps, sub, true));
    }
  }
  // Exact unbiasedness holds at any parameter for these two; exercise a
  // nonzero-gradient operating point as well.
  {
    Rng sub = rng.spawn(101);
    suite.checks.push_back(three_se_check("gini_dev n=8 p=0.731", bandit, policy, theta_generic,
                                          MetricKind::make(Metric::GiniDev), gini, 8, reps, sub,
                                          true));
  }
  {
    Rng sub = rng.spawn(102);
    suite.checks.push_back(three_se_check("variance n=8 p=0.731", bandit, policy, theta_generic,
                                          MetricKind::make(Metric::Variance), variance, 8, reps,
                                          sub, true));
  }
  // Informational: the leave-one-out plug-ins decay like 1/n rather than
  // vanishing at finite n; larger batches shrink the semi-variance gap.
  for (std::size_t n : {std::size_t{32}, std::size_t{128}}) {
    Rng sub = rng.spawn(200 + n);
    CheckResult r = three_se_check(fmt("semi_var n=%zu p=0.5 (informational)", n), bandit, policy,
                                   theta_half, MetricKind::make(Metric::SemiVar), semivar, n,
                                   reps / 4, sub, false);
    r.pass = true;  // reported for the decay trend only
    suite.checks.push_back(r);
  }
  return suite;
}

SuiteResult run_bias_rate_suite(std::size_t reps, std::uint64_t seed) {
  SuiteResult suite{"bias_rate", {}};
  const DiscreteMdp bandit = make_smoothed_bandit(101);
  const OraclePolicy policy = make_softmax_oracle_policy(1, 2);
  const Vec theta = {0.0, 0.4};
  const std::vector<std::size_t> sizes = {8, 32, 128, 512};
  Rng rng(seed);

  struct Row {
    const char* label;
    MetricKind kind;
    EstimatorFn fn;
  };
  const Row rows[] = {
      {"mean_median_dev", MetricKind::make(Metric::MeanMedianDev),
       [](const GradientBatch& b, Rng&) {
         return grad_mmd(b, QuantileMethod::LowerOrderStat);
       }},
      {"cvar_dev alpha=0.2", MetricKind::make(Metric::CVaRDev, 0.2),
       [](const GradientBatch& b, Rng&) {
         return grad_cvar_dev(b, 0.2, QuantileMethod::LowerOrderStat);
       }},
  };
  for (const Row& row : rows) {
    Rng sub = rng.spawn(static_cast<std::uint64_t>(row.kind.metric));
    const Vec oracle = finite_diff_gradient(row.kind, bandit, policy, theta);
    const std::vector<BiasPoint> curve =
        estimator_bias_curve(row.fn, bandit, policy, theta, oracle, sizes, reps, sub);
    const double slope = log_log_slope(curve);

    bool monotone = true;
    for (std::size_t k = 0; k + 1 < curve.size(); ++k) {
      const double slack = 2.0 * std::sqrt(curve[k].se * curve[k].se +
                                           curve[k + 1].se * curve[k + 1].se);
      if (curve[k + 1].bias > curve[k].bias + slack) monotone = false;
    }
    std::string detail = fmt("slope=%.3f; bias(se):", slope);
    for (const BiasPoint& p : curve)
      detail += fmt(" n=%zu %.4g(%.2g)", p.n, p.bias, p.se);

    CheckResult res;
    res.name = fmt("%s bias rate", row.label);
    res.pass = slope >= -1.0 && slope <= -0.25 && monotone;
    res.details = detail + (monotone ? "" : " [non-monotone]");
    suite.checks.push_back(res);
  }
  return suite;
}

namespace {

// Continuous two-component Gaussian mixture return used by the IQR check;
// atoms would make the exact IQR a staircase with zero derivative.
struct MixtureBandit {
  double mu0 = 0.0, sd0 = 1.0, mu1 = 1.5, sd1 = 0.6;

  double cdf(double x, double p1) const {
    return (1.0 - p1) * normal_cdf((x - mu0) / sd0) + p1 * normal_cdf((x - mu1) / sd1);
  }
  double quantile(double alpha, double p1) const {
    double lo = std::min(mu0 - 10.0 * sd0, mu1 - 10.0 * sd1);
    double hi = std::max(mu0 + 10.0 * sd0, mu1 + 10.0 * sd1);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (cdf(mid, p1) < alpha ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
  double iqr(double alpha, double p1) const {
    return quantile(alpha, p1) - quantile(1.0 - alpha, p1);
  }
};

}  // namespace

SuiteResult run_iqr_direction_suite(std::size_t reps, std::uint64_t seed) {
  SuiteResult suite{"iqr_direction", {}};
  const MixtureBandit mix;
  const OraclePolicy policy = make_softmax_oracle_policy(1, 2);
  const Vec theta = {0.0, 0.3};
  const double alpha = 0.75;
  const std::size_t n = 64;
  Rng rng(seed);

  // Central differences of the exact mixture IQR through the softmax weight.
  const double h = 1e-4;
  Vec oracle(2, 0.0);
  for (std::size_t d = 0; d < 2; ++d) {
    Vec probe = theta;
    probe[d] = theta[d] + h;
    const double up = mix.iqr(alpha, policy.probs(probe, 0)[1]);
    probe[d] = theta[d] - h;
    const double down = mix.iqr(alpha, policy.probs(probe, 0)[1]);
    oracle[d] = (up - down) / (2.0 * h);
  }

  const double p1 = policy.probs(theta, 0)[1];
  MomentAccumulator acc(2);
  for (std::size_t r = 0; r < reps; ++r) {
    GradientBatch batch;
    batch.param_dim = 2;
    for (std::size_t i = 0; i < n; ++i) {
      const int arm = rng.uniform() < p1 ? 1 : 0;
      const double value = arm == 1 ? mix.mu1 + mix.sd1 * rng.normal()
                                    : mix.mu0 + mix.sd0 * rng.normal();
      Vec omega(2, 0.0);
      policy.score(theta, 0, arm).add_to(omega, 1.0);
      batch.returns.push_back(value);
      batch.scores.push_back(std::move(omega));
    }
    acc.add(grad_iqr(batch, alpha, QuantileMethod::LowerOrderStat).grad);
  }
  Vec mean = {acc.mean(0), acc.mean(1)};
  const double cosine = dot(mean, oracle) / (norm2(mean) * norm2(oracle));
  CheckResult res;
  res.name = "iqr gradient direction";
  res.pass = cosine > 0.9;
  res.details = fmt("cosine=%.4f over %zu reps (n=%zu, alpha=%.2f)", cosine, reps, n, alpha);
  suite.checks.push_back(res);
  return suite;
}

namespace {

SampleBatch random_batch(Rng& rng, std::size_t len, bool tie_rich) {
  SampleBatch b;
  b.values.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    double v = rng.uniform() < 0.5 ? 3.0 * rng.normal() : 2.0 * (-std::log(rng.uniform_pos())) - 1.0;
    if (tie_rich) v = std::round(v * 10.0) / 10.0;
    b.values.push_back(v);
  }
  return b;
}

SampleBatch shifted(const SampleBatch& b, double c) {
  SampleBatch out = b;
  for (double& v : out.values) v += c;
  return out;
}

SampleBatch scaled_batch(const SampleBatch& b, double c) {
  SampleBatch out = b;
  for (double& v : out.values) v *= c;
  return out;
}

SampleBatch summed(const SampleBatch& a, const SampleBatch& b) {
  SampleBatch out = a;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
  return out;
}

AtomDistribution random_atoms(Rng& rng, std::size_t max_atoms) {
  const std::size_t m = 1 + rng.uniform_int(max_atoms);
  AtomDistribution dist;
  double total = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    dist.atoms.push_back({5.0 * rng.normal(), rng.uniform_pos()});
    total += dist.atoms.back().probability;
  }
  for (auto& a : dist.atoms) a.probability /= total;
  return dist;
}

}  // namespace

SuiteResult run_coherence_suite(std::size_t batches, std::uint64_t seed) {
  SuiteResult suite{"coherence", {}};
  Rng rng(seed);
  const double tol = 1e-9;
  const QuantileMethod qm = QuantileMethod::LowerOrderStat;

  const std::vector<MetricKind> scale_one = {
      MetricKind::make(Metric::GiniDev),       MetricKind::make(Metric::MeanDev),
      MetricKind::make(Metric::MeanMedianDev), MetricKind::make(Metric::Std),
      MetricKind::make(Metric::SemiStd),       MetricKind::make(Metric::CVaRDev, 0.3),
  };
  const std::vector<MetricKind> scale_two = {
      MetricKind::make(Metric::Variance),
      MetricKind::make(Metric::SemiVar),
  };
  const std::vector<MetricKind> subadditive = {
      MetricKind::make(Metric::GiniDev), MetricKind::make(Metric::MeanDev),
      MetricKind::make(Metric::MeanMedianDev), MetricKind::make(Metric::Std),
      MetricKind::make(Metric::SemiStd),
  };
  const double upper_alpha = 0.7;

  std::size_t loc_fail = 0, hom_fail = 0, sub_fail = 0, std_fail = 0;
  for (std::size_t it = 0; it < batches; ++it) {
    const std::size_t len = 2 + rng.uniform_int(39);
    const bool ties = rng.uniform() < 0.3;
    const SampleBatch x = random_batch(rng, len, ties);
    const SampleBatch y = random_batch(rng, len, ties);
    const double c_shift = rng.uniform(-100.0, 100.0);
    const double c_scale = rng.uniform(0.1, 5.0);

    const auto near = [&](double a, double b) {
      return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
    };

    // location invariance: coherent kinds, MMD, Variance, both CVaR tails
    for (const MetricKind& k : scale_one)
      if (!near(empirical_metric(k, shifted(x, c_shift), qm), empirical_metric(k, x, qm)))
        ++loc_fail;
    if (!near(empirical_metric(MetricKind::make(Metric::Variance), shifted(x, c_shift), qm),
              empirical_metric(MetricKind::make(Metric::Variance), x, qm)))
      ++loc_fail;
    if (!near(upper_cvar_deviation(shifted(x, c_shift), upper_alpha),
              upper_cvar_deviation(x, upper_alpha)))
      ++loc_fail;

    // positive homogeneity: degree one for the coherent family, degree two
    // for Variance and SemiVar
    for (const MetricKind& k : scale_one)
      if (!near(empirical_metric(k, scaled_batch(x, c_scale), qm),
                c_scale * empirical_metric(k, x, qm)))
        ++hom_fail;
    if (!near(upper_cvar_deviation(scaled_batch(x, c_scale), upper_alpha),
              c_scale * upper_cvar_deviation(x, upper_alpha)))
      ++hom_fail;
    for (const MetricKind& k : scale_two)
      if (!near(empirical_metric(k, scaled_batch(x, c_scale), qm),
                c_scale * c_scale * empirical_metric(k, x, qm)))
        ++hom_fail;

    // sub-additivity on the paired empirical distribution
    const SampleBatch xy = summed(x, y);
    for (const MetricKind& k : subadditive)
      if (empirical_metric(k, xy, qm) >
          empirical_metric(k, x, qm) + empirical_metric(k, y, qm) + tol)
        ++sub_fail;
    if (upper_cvar_deviation(xy, upper_alpha) >
        upper_cvar_deviation(x, upper_alpha) + upper_cvar_deviation(y, upper_alpha) + tol)
      ++sub_fail;

    // standardization: constant batches vanish for every metric
    SampleBatch constant;
    constant.values.assign(len, c_shift);
    for (Metric m : {Metric::Variance, Metric::GiniDev, Metric::MeanDev, Metric::MeanMedianDev,
                     Metric::Std, Metric::Iqr, Metric::CVaRDev, Metric::SemiVar, Metric::SemiStd}) {
      const MetricKind k = MetricKind::make(
          m, (m == Metric::Iqr || m == Metric::CVaRDev) ? std::optional<double>(0.75)
                                                        : std::nullopt);
      if (std::abs(empirical_metric(k, constant, qm)) > tol) ++std_fail;
    }
  }
  suite.checks.push_back({"location invariance", loc_fail == 0, true,
                          fmt("%zu violations over %zu batches", loc_fail, batches)});
  suite.checks.push_back({"positive homogeneity", hom_fail == 0, true,
                          fmt("%zu violations over %zu batches", hom_fail, batches)});
  suite.checks.push_back({"sub-additivity", sub_fail == 0, true,
                          fmt("%zu violations over %zu batches", sub_fail, batches)});
  suite.checks.push_back({"standardization", std_fail == 0, true,
                          fmt("%zu violations over %zu batches", std_fail, batches)});

  // pinned witness: variance scales quadratically, not linearly
  {
    SampleBatch x;
    x.values = {0.0, 1.0};
    const MetricKind var = MetricKind::make(Metric::Variance);
    const double direct = empirical_metric(var, x, qm);
    const double doubled = empirical_metric(var, scaled_batch(x, 2.0), qm);
    const bool pass = std::abs(doubled - 4.0 * direct) <= tol && doubled - 2.0 * direct > 0.1;
    suite.checks.push_back({"variance homogeneity witness", pass, true,
                            fmt("V(2X)=%.3f vs 2V(X)=%.3f", doubled, 2.0 * direct)});
  }
  // pinned witness: IQR super-additive pair
  {
    SampleBatch x, y;
    x.values = {0.0, 0.0, 0.0, 10.0};
    y.values = {10.0, 0.0, 0.0, 0.0};
    const MetricKind iqr = MetricKind::make(Metric::Iqr, 0.75);
    const double lhs = empirical_metric(iqr, summed(x, y), qm);
    const double rhs = empirical_metric(iqr, x, qm) + empirical_metric(iqr, y, qm);
    suite.checks.push_back({"iqr sub-additivity witness", lhs > rhs + 1.0, true,
                            fmt("IQR(x+y)=%.1f > IQR(x)+IQR(y)=%.1f", lhs, rhs)});
  }
  // Glasser bound STD >= sqrt(3) GD, equality approached by uniform grids
  {
    std::size_t fails = 0;
    Rng sub = rng.spawn(7);
    for (std::size_t it = 0; it < batches; ++it) {
      const AtomDistribution dist = random_atoms(sub, 50);
      const double sd = exact_metric_on_atoms(MetricKind::make(Metric::Std), dist, qm);
      const double gd = exact_metric_on_atoms(MetricKind::make(Metric::GiniDev), dist, qm);
      if (sd < std::sqrt(3.0) * gd - tol) ++fails;
    }
    AtomDistribution grid;
    const std::size_t m = 400;
    for (std::size_t k = 0; k < m; ++k)
      grid.atoms.push_back({static_cast<double>(k) / (m - 1), 1.0 / static_cast<double>(m)});
    const double sd = exact_metric_on_atoms(MetricKind::make(Metric::Std), grid, qm);
    const double gd = exact_metric_on_atoms(MetricKind::make(Metric::GiniDev), grid, qm);
    const double ratio = sd / (std::sqrt(3.0) * gd);
    const bool pass = fails == 0 && ratio >= 1.0 - 1e-9 && ratio < 1.01;
    suite.checks.push_back({"glasser bound", pass, true,
                            fmt("%zu violations; uniform-grid ratio %.6f", fails, ratio)});
  }
  return suite;
}

SuiteResult run_quantile_identity_suite(std::size_t cases, std::uint64_t seed) {
  SuiteResult suite{"quantile_identities", {}};
  Rng rng(seed);
  const double tol = 1e-9;
  std::size_t gini_fail = 0, mmd_fail = 0;
  double worst = 0.0;
  for (std::size_t it = 0; it < cases; ++it) {
    const AtomDistribution dist = random_atoms(rng, 50);
    const double gd_direct =
        exact_metric_on_atoms(MetricKind::make(Metric::GiniDev), dist, QuantileMethod::LowerOrderStat);
    const double gd_choquet = gini_dev_quantile_form(dist);
    const double mmd_direct = exact_metric_on_atoms(MetricKind::make(Metric::MeanMedianDev), dist,
                                                    QuantileMethod::LowerOrderStat);
    const double mmd_choquet = mmd_quantile_form(dist);
    const double gd_err = std::abs(gd_direct - gd_choquet) / std::max(1.0, std::abs(gd_direct));
    const double mmd_err =
        std::abs(mmd_direct - mmd_choquet) / std::max(1.0, std::abs(mmd_direct));
    worst = std::max({worst, gd_err, mmd_err});
    if (gd_err > tol) ++gini_fail;
    if (mmd_err > tol) ++mmd_fail;
  }
  suite.checks.push_back({"gini choquet identity", gini_fail == 0, true,
                          fmt("%zu violations over %zu atom sets", gini_fail, cases)});
  suite.checks.push_back({"mmd choquet identity", mmd_fail == 0, true,
                          fmt("%zu violations over %zu atom sets (worst %.2e)", mmd_fail, cases, worst)});
  return suite;
}

SuiteResult run_oracle_self_suite(std::uint64_t seed) {
  SuiteResult suite{"oracle_self", {}};
  const OraclePolicy policy = make_softmax_oracle_policy(1, 2);
  Rng rng(seed);

  // bandit law matches the softmax probability exactly
  {
    const DiscreteMdp bandit = make_bernoulli_bandit();
    const Vec theta = {0.0, 0.5};
    const AtomDistribution dist = enumerate_return_distribution(bandit, policy, theta);
    const double p = policy.probs(theta, 0)[1];
    const bool pass = dist.atoms.size() == 2 && std::abs(dist.atoms[0].value - 0.0) < 1e-15 &&
                      std::abs(dist.atoms[1].value - 1.0) < 1e-15 &&
                      std::abs(dist.atoms[1].probability - p) < 1e-12;
    suite.checks.push_back({"bandit law", pass, true, fmt("p=%.6f", p)});
  }
  // deterministic one-step MDP collapses to a single atom
  {
    DiscreteMdp det;
    det.n_states = 1;
    det.n_actions = 1;
    det.horizon = 1;
    det.outcomes.assign(1, std::vector<std::vector<DiscreteMdp::Outcome>>(1));
    det.outcomes[0][0] = {{1.0, 0, -3.5, true}};
    const OraclePolicy one = make_softmax_oracle_policy(1, 1);
    const AtomDistribution dist = enumerate_return_distribution(det, one, {0.0});
    suite.checks.push_back({"deterministic single atom",
                            dist.atoms.size() == 1 && dist.atoms[0].value == -3.5, true, ""});
  }
  // two-step chain with binary noise: four product atoms
  {
    DiscreteMdp chain;
    chain.n_states = 2;
    chain.n_actions = 1;
    chain.horizon = 2;
    chain.gamma = 0.9;
    chain.initial_state = 0;
    chain.outcomes.assign(2, std::vector<std::vector<DiscreteMdp::Outcome>>(1));
    chain.outcomes[0][0] = {{0.5, 1, -1.5, false}, {0.5, 1, -0.5, false}};
    chain.outcomes[1][0] = {{0.5, 1, 0.5, true}, {0.5, 1, 1.5, true}};
    const OraclePolicy one = make_softmax_oracle_policy(2, 1);
    const AtomDistribution dist = enumerate_return_distribution(chain, one, {0.0, 0.0});
    bool pass = dist.atoms.size() == 4;
    if (pass) {
      const double expected[4] = {-1.5 + 0.9 * 0.5, -1.5 + 0.9 * 1.5, -0.5 + 0.9 * 0.5,
                                  -0.5 + 0.9 * 1.5};
      std::vector<double> exp_sorted(expected, expected + 4);
      std::sort(exp_sorted.begin(), exp_sorted.end());
      for (int i = 0; i < 4; ++i)
        pass = pass && std::abs(dist.atoms[i].value - exp_sorted[i]) < 1e-12 &&
               std::abs(dist.atoms[i].probability - 0.25) < 1e-12;
    }
    suite.checks.push_back({"two-step chain atoms", pass, true, ""});
  }
  // Monte Carlo mean vs exact mean within 3 SE at 1e6 rollouts
  {
    const DiscreteMdp bandit = make_bernoulli_bandit();
    const Vec theta = {0.0, 0.5};
    const AtomDistribution dist = enumerate_return_distribution(bandit, policy, theta);
    const std::size_t reps = 1000000;
    Rng sub = rng.spawn(3);
    const double mc = monte_carlo_mean_return(bandit, policy, theta, reps, sub);
    const double p = dist.mean();
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(reps));
    suite.checks.push_back({"monte carlo mean", std::abs(mc - p) <= 3.0 * se, true,
                            fmt("mc=%.5f exact=%.5f se=%.2g", mc, p, se)});
  }
  // finite-difference step stability across h in [1e-6, 1e-4]
  {
    const DiscreteMdp bandit = make_bernoulli_bandit();
    const Vec theta = {0.0, 0.7};
    const MetricKind gd = MetricKind::make(Metric::GiniDev);
    const Vec g6 = finite_diff_gradient(gd, bandit, policy, theta, 1e-6);
    const Vec g5 = finite_diff_gradient(gd, bandit, policy, theta, 1e-5);
    const Vec g4 = finite_diff_gradient(gd, bandit, policy, theta, 1e-4);
    double worst = 0.0;
    for (std::size_t d = 0; d < theta.size(); ++d)
      worst = std::max({worst, std::abs(g6[d] - g5[d]), std::abs(g5[d] - g4[d])});
    suite.checks.push_back(
        {"finite-difference stability", worst < 1e-5, true, fmt("max step drift %.2e", worst)});
  }
  return suite;
}

std::vector<SuiteResult> run_verification(const std::string& suite, std::uint64_t seed) {
  std::vector<SuiteResult> out;
  const bool all = suite == "all";
  if (all || suite == "estimators") {
    out.push_back(run_unbiasedness_suite(200000, seed + 1));
    out.push_back(run_bias_rate_suite(30000, seed + 2));
    out.push_back(run_iqr_direction_suite(100000, seed + 3));
  }
  if (all || suite == "coherence") {
    out.push_back(run_coherence_suite(1000, seed + 4));
    out.push_back(run_quantile_identity_suite(1000, seed + 5));
  }
  if (all || suite == "oracle") {
    out.push_back(run_oracle_self_suite(seed + 6));
  }
  if (out.empty()) throw invalid_input("run_verification: unknown suite '" + suite + "'");
  return out;
}

}  // namespace varpg
