#include "varpg/types.hpp"

#include <cmath>

#include "varpg/errors.hpp"

namespace varpg {

void SampleBatch::validate() const {
  if (values.empty()) throw invalid_input("SampleBatch: empty batch");
  for (double v : values)
    if (!std::isfinite(v)) throw invalid_input("SampleBatch: non-finite value");
  if (weights) {
    if (weights->size() != values.size())
      throw invalid_input("SampleBatch: weights/values length mismatch");
    double sum = 0.0;
    for (double w : *weights) {
      if (!std::isfinite(w) || w < 0.0) throw invalid_input("SampleBatch: bad weight");
      sum += w;
    }
    if (!(sum > 0.0)) throw invalid_input("SampleBatch: weights sum to zero");
  }
}

double AtomDistribution::mean() const {
  double m = 0.0;
  for (const Atom& a : atoms) m += a.probability * a.value;
  return m;
}

void AtomDistribution::validate(double tol) const {
  if (atoms.empty()) throw invalid_input("AtomDistribution: no atoms");
  double sum = 0.0;
  for (const Atom& a : atoms) {
    if (!std::isfinite(a.value) || !std::isfinite(a.probability) || a.probability < 0.0)
      throw invalid_input("AtomDistribution: bad atom");
    sum += a.probability;
  }
  if (std::abs(sum - 1.0) > tol)
    throw invalid_input("AtomDistribution: probabilities not normalized");
}

namespace {

struct MetricFlags {
  bool coherent;
  bool unbiased;
  bool double_sampling;
};

// Summary flags per metric: coherent / PG-unbiased / PG-double-sampling.
// (The CVaRDev coherent flag refers to its upper-tail form.)
MetricFlags flags_for(Metric m) {
  switch (m) {
    case Metric::CVaRDev:       return {true, false, false};
    case Metric::GiniDev:       return {true, true, false};
    case Metric::Iqr:           return {false, false, false};
    case Metric::MeanDev:       return {true, true, true};
    case Metric::MeanMedianDev: return {false, false, false};
    case Metric::Variance:      return {false, true, true};
    case Metric::Std:           return {true, true, true};
    case Metric::SemiVar:       return {false, true, true};
    case Metric::SemiStd:       return {true, true, true};
  }
  return {false, false, false};
}

}  // namespace

bool MetricKind::coherent() const { return flags_for(metric).coherent; }
bool MetricKind::pg_unbiased() const { return flags_for(metric).unbiased; }
bool MetricKind::pg_double_sampling() const { return flags_for(metric).double_sampling; }

MetricKind MetricKind::make(Metric m, std::optional<double> alpha) {
  MetricKind k;
  k.metric = m;
  k.alpha = alpha;
  if (k.needs_alpha()) {
    if (!alpha) throw invalid_input(std::string(metric_name(m)) + ": alpha required");
    if (m == Metric::Iqr && !(*alpha >= 0.5 && *alpha < 1.0))
      throw invalid_input("iqr: alpha must lie in [1/2, 1)");
    if (m == Metric::CVaRDev && !(*alpha > 0.0 && *alpha < 1.0))
      throw invalid_input("cvar_dev: alpha must lie in (0, 1)");
  }
  return k;
}

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::Variance:      return "variance";
    case Metric::GiniDev:       return "gini_dev";
    case Metric::MeanDev:       return "mean_dev";
    case Metric::MeanMedianDev: return "mean_median_dev";
    case Metric::Std:           return "std";
    case Metric::Iqr:           return "iqr";
    case Metric::CVaRDev:       return "cvar_dev";
    case Metric::SemiVar:       return "semi_var";
    case Metric::SemiStd:       return "semi_std";
  }
  return "?";
}

std::optional<Metric> metric_from_name(const std::string& name) {
  for (Metric m : {Metric::Variance, Metric::GiniDev, Metric::MeanDev, Metric::MeanMedianDev,
                   Metric::Std, Metric::Iqr, Metric::CVaRDev, Metric::SemiVar, Metric::SemiStd})
    if (name == metric_name(m)) return m;
  return std::nullopt;
}

}  // namespace varpg
