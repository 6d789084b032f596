#ifndef VARPG_RISK_METRICS_HPP
#define VARPG_RISK_METRICS_HPP

#include "varpg/types.hpp"

namespace varpg {

// Empirical quantile of an unweighted batch.
//   LowerOrderStat:       smallest sample z with F(z) >= alpha.
//   LinearInterpolation:  linear interpolation at position (n-1)*alpha of the
//                         sorted samples.
double empirical_quantile(const SampleBatch& batch, double alpha, QuantileMethod qmethod);

// Quantile of a weighted batch: sort samples ascending, place each at its
// normalized cumulative weight, interpolate linearly, clamp at the extremes.
double weighted_quantile(const SampleBatch& batch, double alpha);

// Weighted analog of the lower order statistic: smallest sample whose
// cumulative weight reaches alpha * (total weight). Reduces bit-for-bit to
// empirical_quantile(LowerOrderStat) under unit weights.
double weighted_quantile_lower(const SampleBatch& batch, double alpha);

// Gaussian-kernel density estimate at `point` with the one-dimensional
// Silverman bandwidth h = sd * (3n/4)^(-1/5) (sample sd, n-1 denominator).
// Throws degenerate_density_error when the sample sd is zero.
double kde_density_at(const SampleBatch& batch, double point);

// Point estimate of a measure of variability on the empirical (weighted)
// distribution of the batch. Conventions:
//   Variance      population variance of the empirical measure
//   GiniDev       (1/2) sum_ij p_i p_j |x_i - x_j|   (i.i.d.-copy form)
//   MeanDev       sum_i p_i |x_i - mean|
//   MeanMedianDev sum_i p_i |x_i - q_{1/2}| with q from `qmethod`
//   Std           sqrt(Variance)
//   Iqr           q_alpha - q_{1-alpha}, alpha in [1/2, 1)
//   CVaRDev       mean - CVaR_alpha (lower tail, exact tail integral)
//   SemiVar       sum_i p_i (x_i - mean)^2 1[x_i <= mean]
//   SemiStd       sqrt(SemiVar)
double empirical_metric(const MetricKind& kind, const SampleBatch& batch, QuantileMethod qmethod);

// Same formulas evaluated on an exact atom distribution; the oracle's ground
// truth. Probabilities must sum to 1 within 1e-12.
double exact_metric_on_atoms(const MetricKind& kind, const AtomDistribution& dist,
                             QuantileMethod qmethod);

// Lower-tail CVaR of the empirical distribution, (1/alpha) * int_0^alpha q_u du,
// evaluated exactly on the staircase quantile function (partial atom included).
double empirical_cvar_lower(const SampleBatch& batch, double alpha);

// Upper-tail CVaR deviation CVaR^(upper)_alpha(X) - E[X]; used by the
// coherence suite only, not a training target.
double upper_cvar_deviation(const SampleBatch& batch, double alpha);

// Quantile-representation forms on atom distributions, used as identity
// oracles against the direct definitions:
//   GiniDev  = int_0^1 F^{-1}(u) (2u - 1) du
//   MMD      = int_{1/2}^1 F^{-1}(u) du - int_0^{1/2} F^{-1}(u) du
double gini_dev_quantile_form(const AtomDistribution& dist);
double mmd_quantile_form(const AtomDistribution& dist);

}  // namespace varpg

#endif  // VARPG_RISK_METRICS_HPP
