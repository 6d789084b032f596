#include "varpg/risk_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "varpg/errors.hpp"

namespace varpg {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;

// Samples sorted by value with normalized probabilities and cumulative sums.
struct SortedDist {
  std::vector<double> x;    // ascending values
  std::vector<double> p;    // normalized masses, same order
  std::vector<double> cum;  // cumulative masses, cum.back() ~= 1
};

SortedDist sort_dist(const SampleBatch& batch) {
  const std::size_t n = batch.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return batch.values[a] < batch.values[b];
  });

  SortedDist d;
  d.x.resize(n);
  d.p.resize(n);
  d.cum.resize(n);
  double total = 0.0;
  if (batch.weights) {
    for (double w : *batch.weights) total += w;
  } else {
    total = static_cast<double>(n);
  }
  double run = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    d.x[k] = batch.values[order[k]];
    const double w = batch.weights ? (*batch.weights)[order[k]] : 1.0;
    d.p[k] = w / total;
    run += d.p[k];
    d.cum[k] = run;
  }
  return d;
}

double weighted_mean(const SampleBatch& batch) {
  double sw = 0.0, sx = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double w = batch.weights ? (*batch.weights)[i] : 1.0;
    sw += w;
    sx += w * batch.values[i];
  }
  return sx / sw;
}

double quantile_dispatch(const SampleBatch& batch, double alpha, QuantileMethod qmethod) {
  if (qmethod == QuantileMethod::LowerOrderStat)
    return batch.weighted() ? weighted_quantile_lower(batch, alpha)
                            : empirical_quantile(batch, alpha, qmethod);
  return batch.weighted() ? weighted_quantile(batch, alpha)
                          : empirical_quantile(batch, alpha, qmethod);
}

// (1/alpha) * integral of the staircase quantile function over (0, alpha].
double cvar_lower(const SortedDist& d, double alpha) {
  double tail = alpha;
  double acc = 0.0;
  for (std::size_t k = 0; k < d.x.size() && tail > 0.0; ++k) {
    const double take = std::min(d.p[k], tail);
    acc += take * d.x[k];
    tail -= take;
  }
  if (tail > 0.0) acc += tail * d.x.back();  // rounding slack in the masses
  return acc / alpha;
}

// (1/(1-alpha)) * integral over (alpha, 1].
double cvar_upper(const SortedDist& d, double alpha) {
  double tail = 1.0 - alpha;
  double acc = 0.0;
  for (std::size_t k = d.x.size(); k-- > 0 && tail > 0.0;) {
    const double take = std::min(d.p[k], tail);
    acc += take * d.x[k];
    tail -= take;
  }
  if (tail > 0.0) acc += tail * d.x.front();
  return acc / (1.0 - alpha);
}

// sum_{i<j} p_i p_j (x_j - x_i) via prefix sums over the sorted values;
// equals (1/2) E|X - X*| including the (zero) diagonal terms.
double gini_sorted(const SortedDist& d) {
  double mass_below = 0.0, weighted_below = 0.0, acc = 0.0;
  for (std::size_t k = 0; k < d.x.size(); ++k) {
    acc += d.p[k] * (d.x[k] * mass_below - weighted_below);
    mass_below += d.p[k];
    weighted_below += d.p[k] * d.x[k];
  }
  return acc;
}

double require_alpha(const MetricKind& kind) {
  if (!kind.alpha) throw invalid_input(std::string(metric_name(kind.metric)) + ": alpha required");
  return *kind.alpha;
}

}  // namespace

double empirical_quantile(const SampleBatch& batch, double alpha, QuantileMethod qmethod) {
  batch.validate();
  if (batch.weighted()) throw invalid_input("empirical_quantile: batch must be unweighted");
  if (!(alpha > 0.0 && alpha < 1.0)) throw invalid_input("empirical_quantile: alpha out of (0,1)");
  std::vector<double> x(batch.values);
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  if (qmethod == QuantileMethod::LowerOrderStat) {
    std::size_t k = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n)));
    k = std::min(std::max<std::size_t>(k, 1), n);
    return x[k - 1];
  }
  const double pos = alpha * static_cast<double>(n - 1);
  const std::size_t lo = std::min(static_cast<std::size_t>(pos), n - 1);
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = pos - static_cast<double>(lo);
  return x[lo] + frac * (x[hi] - x[lo]);
}

double weighted_quantile(const SampleBatch& batch, double alpha) {
  batch.validate();
  if (!batch.weighted()) throw invalid_input("weighted_quantile: weights required");
  if (!(alpha > 0.0 && alpha < 1.0)) throw invalid_input("weighted_quantile: alpha out of (0,1)");
  const SortedDist d = sort_dist(batch);
  if (alpha <= d.cum.front()) return d.x.front();
  if (alpha >= d.cum.back()) return d.x.back();
  const auto it = std::upper_bound(d.cum.begin(), d.cum.end(), alpha);
  const std::size_t j = static_cast<std::size_t>(it - d.cum.begin());
  const double seg = d.cum[j] - d.cum[j - 1];
  if (seg <= 0.0) return d.x[j];
  const double t = (alpha - d.cum[j - 1]) / seg;
  return d.x[j - 1] + t * (d.x[j] - d.x[j - 1]);
}

double weighted_quantile_lower(const SampleBatch& batch, double alpha) {
  batch.validate();
  if (!batch.weighted()) throw invalid_input("weighted_quantile_lower: weights required");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw invalid_input("weighted_quantile_lower: alpha out of (0,1)");
  // Compare raw cumulative weights against alpha * total so that unit weights
  // reproduce the unweighted order-statistic rule exactly.
  const std::size_t n = batch.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return batch.values[a] < batch.values[b];
  });
  double total = 0.0;
  for (double w : *batch.weights) total += w;
  const double target = alpha * total;
  double run = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    run += (*batch.weights)[order[k]];
    if (run >= target) return batch.values[order[k]];
  }
  return batch.values[order[n - 1]];
}

double kde_density_at(const SampleBatch& batch, double point) {
  batch.validate();
  const std::size_t n = batch.size();
  if (n < 2) throw invalid_input("kde_density_at: need at least two samples");
  double mean = 0.0;
  for (double v : batch.values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : batch.values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw degenerate_density_error("kde_density_at: zero sample variance");
  const double h = sd * std::pow(0.75 * static_cast<double>(n), -0.2);
  double acc = 0.0;
  for (double v : batch.values) {
    const double z = (point - v) / h;
    acc += std::exp(-0.5 * z * z);
  }
  return acc * kInvSqrt2Pi / (static_cast<double>(n) * h);
}

double empirical_cvar_lower(const SampleBatch& batch, double alpha) {
  batch.validate();
  if (!(alpha > 0.0 && alpha < 1.0)) throw invalid_input("cvar: alpha out of (0,1)");
  return cvar_lower(sort_dist(batch), alpha);
}

double upper_cvar_deviation(const SampleBatch& batch, double alpha) {
  batch.validate();
  if (!(alpha > 0.0 && alpha < 1.0)) throw invalid_input("cvar: alpha out of (0,1)");
  return cvar_upper(sort_dist(batch), alpha) - weighted_mean(batch);
}

double empirical_metric(const MetricKind& kind, const SampleBatch& batch, QuantileMethod qmethod) {
  batch.validate();
  switch (kind.metric) {
    case Metric::Variance:
    case Metric::Std:
    case Metric::SemiVar:
    case Metric::SemiStd: {
      const double mu = weighted_mean(batch);
      double var = 0.0, semi = 0.0;
      double sw = 0.0;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const double w = batch.weights ? (*batch.weights)[i] : 1.0;
        const double dev = batch.values[i] - mu;
        sw += w;
        var += w * dev * dev;
        if (batch.values[i] <= mu) semi += w * dev * dev;
      }
      var /= sw;
      semi /= sw;
      switch (kind.metric) {
        case Metric::Variance: return var;
        case Metric::Std:      return std::sqrt(var);
        case Metric::SemiVar:  return semi;
        default:               return std::sqrt(semi);
      }
    }
    case Metric::GiniDev:
      return gini_sorted(sort_dist(batch));
    case Metric::MeanDev: {
      const double mu = weighted_mean(batch);
      double acc = 0.0, sw = 0.0;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const double w = batch.weights ? (*batch.weights)[i] : 1.0;
        sw += w;
        acc += w * std::abs(batch.values[i] - mu);
      }
      return acc / sw;
    }
    case Metric::MeanMedianDev: {
      const double med = quantile_dispatch(batch, 0.5, qmethod);
      double acc = 0.0, sw = 0.0;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const double w = batch.weights ? (*batch.weights)[i] : 1.0;
        sw += w;
        acc += w * std::abs(batch.values[i] - med);
      }
      return acc / sw;
    }
    case Metric::Iqr: {
      const double a = require_alpha(kind);
      if (!(a >= 0.5 && a < 1.0)) throw invalid_input("iqr: alpha must lie in [1/2, 1)");
      return quantile_dispatch(batch, a, qmethod) - quantile_dispatch(batch, 1.0 - a, qmethod);
    }
    case Metric::CVaRDev: {
      const double a = require_alpha(kind);
      if (!(a > 0.0 && a < 1.0)) throw invalid_input("cvar_dev: alpha must lie in (0, 1)");
      return weighted_mean(batch) - cvar_lower(sort_dist(batch), a);
    }
  }
  throw invalid_input("empirical_metric: unknown metric");
}

double exact_metric_on_atoms(const MetricKind& kind, const AtomDistribution& dist,
                             QuantileMethod qmethod) {
  dist.validate();
  SampleBatch batch;
  batch.values.reserve(dist.atoms.size());
  batch.weights.emplace();
  batch.weights->reserve(dist.atoms.size());
  for (const auto& a : dist.atoms) {
    batch.values.push_back(a.value);
    batch.weights->push_back(a.probability);
  }
  return empirical_metric(kind, batch, qmethod);
}

namespace {

SortedDist sort_atoms(const AtomDistribution& dist) {
  SampleBatch batch;
  batch.weights.emplace();
  for (const auto& a : dist.atoms) {
    batch.values.push_back(a.value);
    batch.weights->push_back(a.probability);
  }
  return sort_dist(batch);
}

}  // namespace

double gini_dev_quantile_form(const AtomDistribution& dist) {
  dist.validate();
  const SortedDist d = sort_atoms(dist);
  // int_a^b (2u - 1) du = (b^2 - b) - (a^2 - a)
  const auto h = [](double u) { return u * u - u; };
  double acc = 0.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < d.x.size(); ++k) {
    acc += d.x[k] * (h(d.cum[k]) - h(prev));
    prev = d.cum[k];
  }
  return acc;
}

double mmd_quantile_form(const AtomDistribution& dist) {
  dist.validate();
  const SortedDist d = sort_atoms(dist);
  const auto overlap = [](double a, double b, double lo, double hi) {
    return std::max(0.0, std::min(b, hi) - std::max(a, lo));
  };
  double acc = 0.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < d.x.size(); ++k) {
    acc += d.x[k] * (overlap(prev, d.cum[k], 0.5, 1.0) - overlap(prev, d.cum[k], 0.0, 0.5));
    prev = d.cum[k];
  }
  return acc;
}

}  // namespace varpg
