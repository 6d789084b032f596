#ifndef VARPG_TYPES_HPP
#define VARPG_TYPES_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace varpg {

// A set of scalar return samples, optionally weighted. Operations normalize
// weights internally; weights must be non-negative with a positive sum.
struct SampleBatch {
  std::vector<double> values;
  std::optional<std::vector<double>> weights;

  std::size_t size() const { return values.size(); }
  bool weighted() const { return weights.has_value(); }

  // Throws invalid_input on empty batch, NaN/Inf entries, negative weights,
  // length mismatch, or all-zero weights.
  void validate() const;
};

// Finite weighted atom set representing an exact return distribution.
struct AtomDistribution {
  struct Atom {
    double value;
    double probability;
  };
  std::vector<Atom> atoms;

  double mean() const;
  // Throws invalid_input unless probabilities are >= 0 and sum to 1 within tol.
  void validate(double tol = 1e-12) const;
};

enum class QuantileMethod {
  // q = inf{ z : F(z) >= alpha }, the lower order statistic.
  LowerOrderStat,
  // Conventional linear interpolation of order statistics (positions
  // (k-1)/(n-1) for unweighted samples; cumulative-weight grid otherwise).
  LinearInterpolation,
};

enum class Metric {
  Variance,
  GiniDev,
  MeanDev,
  MeanMedianDev,
  Std,
  Iqr,
  CVaRDev,
  SemiVar,
  SemiStd,
};

// Metric selector plus the summary flags (coherent / PG-unbiased /
// PG-needs-double-sampling) and the per-metric confidence level.
struct MetricKind {
  Metric metric = Metric::Variance;
  std::optional<double> alpha;  // required for Iqr (in [1/2,1)) and CVaRDev (in (0,1))

  bool coherent() const;
  bool pg_unbiased() const;
  bool pg_double_sampling() const;
  bool needs_alpha() const { return metric == Metric::Iqr || metric == Metric::CVaRDev; }

  // Validates the alpha domain for the chosen metric.
  static MetricKind make(Metric m, std::optional<double> alpha = std::nullopt);
};

const char* metric_name(Metric m);
std::optional<Metric> metric_from_name(const std::string& name);

}  // namespace varpg

#endif  // VARPG_TYPES_HPP
