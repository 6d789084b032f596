#include "varpg/grad_estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "varpg/errors.hpp"
#include "varpg/risk_metrics.hpp"

namespace varpg {

namespace {

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

double max_return(const GradientBatch& batch) {
  return *std::max_element(batch.returns.begin(), batch.returns.end());
}

// Empirical quantile of the batch returns: the plain convention when no IS
// ratios are present, the weighted one otherwise.
double batch_quantile(const GradientBatch& batch, double alpha, QuantileMethod qmethod) {
  SampleBatch s;
  s.values = batch.returns;
  if (!batch.is_ratios) return empirical_quantile(s, alpha, qmethod);
  s.weights = *batch.is_ratios;
  return qmethod == QuantileMethod::LowerOrderStat ? weighted_quantile_lower(s, alpha)
                                                   : weighted_quantile(s, alpha);
}

// rho-weighted (self-normalized) empirical variance / semi-variance of the
// full batch returns; the plug-in normalizer for STD and SemiSTD gradients.
double batch_metric(const GradientBatch& batch, Metric m) {
  SampleBatch s;
  s.values = batch.returns;
  if (batch.is_ratios) s.weights = *batch.is_ratios;
  return empirical_metric(MetricKind::make(m), s, QuantileMethod::LowerOrderStat);
}

GradientEstimate make_estimate(std::size_t n, std::size_t dim) {
  GradientEstimate e;
  e.grad.assign(dim, 0.0);
  e.per_trajectory.assign(n, Vec(dim, 0.0));
  return e;
}

// grad = mean of contributions.
void finalize(GradientEstimate& e) {
  const double inv_n = 1.0 / static_cast<double>(e.per_trajectory.size());
  std::fill(e.grad.begin(), e.grad.end(), 0.0);
  for (const Vec& c : e.per_trajectory) axpy(inv_n, c, e.grad);
}

void require_min_batch(const GradientBatch& batch, std::size_t n_min, const char* who) {
  if (batch.size() < n_min)
    throw invalid_input(std::string(who) + ": need at least " + std::to_string(n_min) +
                        " trajectories");
}

void scale_estimate(GradientEstimate& e, double a) {
  scale(e.grad, a);
  for (Vec& c : e.per_trajectory) scale(c, a);
}

// Self-normalized leave-one-out means over the index set.
std::vector<double> loo_means(const GradientBatch& batch, const std::vector<std::size_t>& set) {
  double sw = 0.0, sx = 0.0;
  for (std::size_t i : set) {
    sw += batch.rho(i);
    sx += batch.rho(i) * batch.returns[i];
  }
  std::vector<double> out(set.size());
  for (std::size_t k = 0; k < set.size(); ++k) {
    const std::size_t i = set[k];
    out[k] = (sx - batch.rho(i) * batch.returns[i]) / (sw - batch.rho(i));
  }
  return out;
}

GradientEstimate mean_plain_on(const GradientBatch& batch, const std::vector<std::size_t>& set) {
  GradientEstimate e = make_estimate(set.size(), batch.param_dim);
  for (std::size_t k = 0; k < set.size(); ++k) {
    const std::size_t i = set[k];
    axpy(batch.rho(i) * batch.returns[i], batch.scores[i], e.per_trajectory[k]);
  }
  finalize(e);
  return e;
}

}  // namespace

void GradientBatch::validate() const {
  if (returns.empty()) throw invalid_input("GradientBatch: empty batch");
  if (scores.size() != returns.size())
    throw invalid_input("GradientBatch: returns/scores length mismatch");
  if (param_dim == 0) throw invalid_input("GradientBatch: param_dim must be positive");
  for (const Vec& s : scores) {
    if (s.size() != param_dim) throw invalid_input("GradientBatch: score dimension mismatch");
    if (!all_finite(s)) throw invalid_input("GradientBatch: non-finite score");
  }
  for (double r : returns)
    if (!std::isfinite(r)) throw invalid_input("GradientBatch: non-finite return");
  if (is_ratios) {
    if (is_ratios->size() != returns.size())
      throw invalid_input("GradientBatch: is_ratios length mismatch");
    for (double r : *is_ratios)
      if (!(r > 0.0) || !std::isfinite(r)) throw invalid_input("GradientBatch: bad IS ratio");
  }
  if (step_terms) {
    if (step_terms->size() != returns.size())
      throw invalid_input("GradientBatch: step_terms length mismatch");
    for (const StepTerms& t : *step_terms)
      if (t.scores.size() != t.rewards_to_go.size())
        throw invalid_input("GradientBatch: step scores/rewards-to-go mismatch");
  }
}

void DoubleSamplingSplit::validate(std::size_t n) const {
  if (set_a.empty() || set_b.empty()) throw invalid_input("split: empty set");
  std::vector<char> seen(n, 0);
  for (std::size_t i : set_a) {
    if (i >= n || seen[i]) throw invalid_input("split: bad index");
    seen[i] = 1;
  }
  for (std::size_t i : set_b) {
    if (i >= n || seen[i]) throw invalid_input("split: bad index");
    seen[i] = 1;
  }
  for (char c : seen)
    if (!c) throw invalid_input("split: sets do not cover the batch");
}

DoubleSamplingSplit split_double_sampling(std::size_t n, Rng& rng) {
  if (n < 2) throw invalid_input("split_double_sampling: need n >= 2");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = n - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
  DoubleSamplingSplit split;
  split.set_a.assign(perm.begin(), perm.begin() + n / 2);
  split.set_b.assign(perm.begin() + n / 2, perm.end());
  std::sort(split.set_a.begin(), split.set_a.end());
  std::sort(split.set_b.begin(), split.set_b.end());
  return split;
}

GradientEstimate grad_mean_plain(const GradientBatch& batch) {
  batch.validate();
  std::vector<std::size_t> all(batch.size());
  std::iota(all.begin(), all.end(), 0);
  return mean_plain_on(batch, all);
}

GradientEstimate grad_mean_reinforce(const GradientBatch& batch,
                                     const std::vector<std::vector<double>>& baselines,
                                     double gamma) {
  batch.validate();
  if (!batch.step_terms) throw invalid_input("grad_mean_reinforce: step_terms required");
  if (baselines.size() != batch.size())
    throw invalid_input("grad_mean_reinforce: baselines length mismatch");
  GradientEstimate e = make_estimate(batch.size(), batch.param_dim);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& steps = (*batch.step_terms)[i];
    if (baselines[i].size() != steps.scores.size())
      throw invalid_input("grad_mean_reinforce: baseline steps mismatch");
    double gamma_t = 1.0;
    for (std::size_t t = 0; t < steps.scores.size(); ++t) {
      steps.scores[t].add_to(e.per_trajectory[i],
                             gamma_t * (steps.rewards_to_go[t] - baselines[i][t]));
      gamma_t *= gamma;
    }
  }
  finalize(e);
  return e;
}

GradientEstimate grad_variance(const GradientBatch& batch, const DoubleSamplingSplit& split) {
  batch.validate();
  require_min_batch(batch, 2, "grad_variance");
  split.validate(batch.size());

  double mean_b = 0.0;
  for (std::size_t j : split.set_b) mean_b += batch.rho(j) * batch.returns[j];
  mean_b /= static_cast<double>(split.set_b.size());

  GradientEstimate e = make_estimate(batch.size(), batch.param_dim);
  const double rescale = static_cast<double>(batch.size()) / static_cast<double>(split.set_a.size());
  for (std::size_t i : split.set_a) {
    const double w = batch.rho(i) * batch.returns[i];
    axpy(rescale * w * (batch.returns[i] - 2.0 * mean_b), batch.scores[i], e.per_trajectory[i]);
  }
  finalize(e);
  e.aux["mean_b"] = mean_b;
  return e;
}

GradientEstimate grad_std(const GradientBatch& batch, const DoubleSamplingSplit& split) {
  batch.validate();
  const double var_hat = batch_metric(batch, Metric::Variance);
  if (!(var_hat > 1e-12)) throw degenerate_scale_error("grad_std: near-zero return variance");
  GradientEstimate e = grad_variance(batch, split);
  scale_estimate(e, 1.0 / (2.0 * std::sqrt(var_hat)));
  e.aux["variance_hat"] = var_hat;
  return e;
}

GradientEstimate grad_gini(const GradientBatch& batch, std::optional<double> upper_bound) {
  batch.validate();
  require_min_batch(batch, 2, "grad_gini");
  const std::size_t n = batch.size();
  const double b = upper_bound.value_or(max_return(batch));

  double rho_sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) rho_sum += batch.rho(j);

  GradientEstimate e = make_estimate(n, batch.param_dim);
  for (std::size_t i = 0; i < n; ++i) {
    double max_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      max_sum += batch.rho(j) * std::max(batch.returns[j], batch.returns[i]);
    }
    const double w_minus_i = rho_sum - batch.rho(i);
    const double eta = 2.0 * max_sum / w_minus_i - (b + batch.returns[i]);
    axpy(batch.rho(i) * eta, batch.scores[i], e.per_trajectory[i]);
  }
  finalize(e);
  e.aux["b"] = b;
  return e;
}

GradientEstimate grad_mean_dev(const GradientBatch& batch, const DoubleSamplingSplit& split) {
  batch.validate();
  split.validate(batch.size());
  if (split.set_a.size() < 2 || split.set_b.size() < 2)
    throw invalid_input("grad_mean_dev: both split sets need >= 2 trajectories");

  const std::vector<double> means = loo_means(batch, split.set_a);
  const double n = static_cast<double>(batch.size());
  const double scale_a = n / static_cast<double>(split.set_a.size());
  const double scale_b = n / static_cast<double>(split.set_b.size());

  GradientEstimate e = make_estimate(batch.size(), batch.param_dim);
  double sign_sum = 0.0;
  for (std::size_t k = 0; k < split.set_a.size(); ++k) {
    const std::size_t i = split.set_a[k];
    const double eta = batch.returns[i] - means[k];
    sign_sum += batch.rho(i) * sgn(eta);
    axpy(scale_a * batch.rho(i) * std::abs(eta), batch.scores[i], e.per_trajectory[i]);
  }
  const double sign_avg = sign_sum / static_cast<double>(split.set_a.size());
  for (std::size_t j : split.set_b)
    axpy(-scale_b * sign_avg * batch.rho(j) * batch.returns[j], batch.scores[j],
         e.per_trajectory[j]);
  finalize(e);
  e.aux["sign_avg"] = sign_avg;
  return e;
}

GradientEstimate grad_mmd(const GradientBatch& batch, QuantileMethod qmethod,
                          std::optional<double> upper_bound) {
  batch.validate();
  require_min_batch(batch, 2, "grad_mmd");
  const double q_half = batch_quantile(batch, 0.5, qmethod);
  const double b = upper_bound.value_or(max_return(batch));

  // 1/2 * 1/(n/2) = 1/n per indicator sum; a return equal to the quantile
  // enters both sums.
  GradientEstimate e = make_estimate(batch.size(), batch.param_dim);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double r = batch.returns[i];
    double coeff = 0.0;
    if (r <= q_half) coeff += 2.0 * q_half - r - b;
    if (r >= q_half) coeff -= b - r;
    axpy(batch.rho(i) * coeff, batch.scores[i], e.per_trajectory[i]);
  }
  finalize(e);
  e.aux["q_half"] = q_half;
  e.aux["b"] = b;
  return e;
}

GradientEstimate grad_iqr(const GradientBatch& batch, double alpha, QuantileMethod qmethod) {
  batch.validate();
  require_min_batch(batch, 3, "grad_iqr");
  if (!(alpha >= 0.5 && alpha < 1.0)) throw invalid_input("grad_iqr: alpha must lie in [1/2, 1)");

  const double q_hi = batch_quantile(batch, alpha, qmethod);
  const double q_lo = batch_quantile(batch, 1.0 - alpha, qmethod);
  SampleBatch returns_only;
  returns_only.values = batch.returns;
  const double f_hi = kde_density_at(returns_only, q_hi);
  const double f_lo = kde_density_at(returns_only, q_lo);
  if (!(f_hi > 0.0) || !(f_lo > 0.0))
    throw degenerate_scale_error("grad_iqr: vanishing KDE density at a quantile");

  GradientEstimate e = make_estimate(batch.size(), batch.param_dim);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double r = batch.returns[i];
    double coeff = 0.0;
    if (r <= q_hi) coeff -= 1.0 / f_hi;
    if (r <= q_lo) coeff += 1.0 / f_lo;
    axpy(batch.rho(i) * coeff, batch.scores[i], e.per_trajectory[i]);
  }
  finalize(e);
  e.aux["q_hi"] = q_hi;
  e.aux["q_lo"] = q_lo;
  e.aux["kde_hi"] = f_hi;
  e.aux["kde_lo"] = f_lo;
  return e;
}

GradientEstimate grad_cvar_dev(const GradientBatch& batch, double alpha, QuantileMethod qmethod) {
  batch.validate();
  require_min_batch(batch, 2, "grad_cvar_dev");
  if (!(alpha > 0.0 && alpha < 1.0)) throw invalid_input("grad_cvar_dev: alpha out of (0,1)");
  const double q_alpha = batch_quantile(batch, alpha, qmethod);

  GradientEstimate e = make_estimate(batch.size(), batch.param_dim);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double r = batch.returns[i];
    double coeff = r;
    if (r <= q_alpha) coeff -= (r - q_alpha) / alpha;
    axpy(batch.rho(i) * coeff, batch.scores[i], e.per_trajectory[i]);
  }
  finalize(e);
  e.aux["q_alpha"] = q_alpha;
  return e;
}

GradientEstimate grad_semivar(const GradientBatch& batch, const DoubleSamplingSplit& split) {
  batch.validate();
  split.validate(batch.size());
  if (split.set_a.size() < 2 || split.set_b.size() < 2)
    throw invalid_input("grad_semivar: both split sets need >= 2 trajectories");

  const std::vector<double> means = loo_means(batch, split.set_a);
  const double n = static_cast<double>(batch.size());
  const double scale_a = n / static_cast<double>(split.set_a.size());
  const double scale_b = n / static_cast<double>(split.set_b.size());

  GradientEstimate e = make_estimate(batch.size(), batch.param_dim);
  double coeff_sum = 0.0;
  for (std::size_t k = 0; k < split.set_a.size(); ++k) {
    const std::size_t i = split.set_a[k];
    const double r = batch.returns[i];
    if (r <= means[k]) {
      const double gap = means[k] - r;
      coeff_sum += batch.rho(i) * 2.0 * gap;
      axpy(scale_a * batch.rho(i) * gap * gap, batch.scores[i], e.per_trajectory[i]);
    }
  }
  const double coeff_avg = coeff_sum / static_cast<double>(split.set_a.size());
  for (std::size_t j : split.set_b)
    axpy(scale_b * coeff_avg * batch.rho(j) * batch.returns[j], batch.scores[j],
         e.per_trajectory[j]);
  finalize(e);
  e.aux["downside_coeff"] = coeff_avg;
  return e;
}

GradientEstimate grad_semistd(const GradientBatch& batch, const DoubleSamplingSplit& split) {
  batch.validate();
  const double sv_hat = batch_metric(batch, Metric::SemiVar);
  if (!(sv_hat > 1e-12)) throw degenerate_scale_error("grad_semistd: near-zero semi-variance");
  GradientEstimate e = grad_semivar(batch, split);
  scale_estimate(e, 1.0 / (2.0 * std::sqrt(sv_hat)));
  e.aux["semivar_hat"] = sv_hat;
  return e;
}

namespace {

GradientEstimate dispatch_variability(const MetricKind& kind, const GradientBatch& batch,
                                      const CombinedConfig& cfg) {
  if (kind.pg_double_sampling()) {
    if (!cfg.rng) throw invalid_input("combined_objective_gradient: rng required for split");
    const DoubleSamplingSplit split = split_double_sampling(batch.size(), *cfg.rng);
    switch (kind.metric) {
      case Metric::Variance: return grad_variance(batch, split);
      case Metric::Std:      return grad_std(batch, split);
      case Metric::MeanDev:  return grad_mean_dev(batch, split);
      case Metric::SemiVar:  return grad_semivar(batch, split);
      case Metric::SemiStd:  return grad_semistd(batch, split);
      default: break;
    }
  }
  switch (kind.metric) {
    case Metric::GiniDev:
      return grad_gini(batch, cfg.upper_bound);
    case Metric::MeanMedianDev:
      return grad_mmd(batch, cfg.qmethod, cfg.upper_bound);
    case Metric::Iqr:
      return grad_iqr(batch, kind.alpha.value(), cfg.qmethod);
    case Metric::CVaRDev:
      return grad_cvar_dev(batch, kind.alpha.value(), cfg.qmethod);
    default:
      break;
  }
  throw invalid_input("combined_objective_gradient: unhandled metric");
}

double contribution_variance(const std::vector<Vec>& contribs, const Vec& mean) {
  if (contribs.empty()) return 0.0;
  const double n = static_cast<double>(contribs.size());
  double acc = 0.0;
  for (std::size_t d = 0; d < mean.size(); ++d) {
    double ss = 0.0;
    for (const Vec& c : contribs) {
      const double dev = c[d] - mean[d];
      ss += dev * dev;
    }
    acc += ss / n;
  }
  return acc / static_cast<double>(mean.size());
}

}  // namespace

GradientEstimate combined_objective_gradient(const MetricKind& kind, const GradientBatch& batch,
                                             double lambda, const CombinedConfig& cfg) {
  batch.validate();
  if (lambda < 0.0) throw invalid_input("combined_objective_gradient: lambda must be >= 0");
  if (kind.needs_alpha() && !kind.alpha)
    throw invalid_input("combined_objective_gradient: metric alpha missing");

  GradientEstimate mean_part;
  if (cfg.mean_override) {
    mean_part = *cfg.mean_override;
  } else {
    if (!cfg.baselines)
      throw invalid_input("combined_objective_gradient: baselines or mean_override required");
    mean_part = grad_mean_reinforce(batch, *cfg.baselines, cfg.gamma);
  }

  GradientEstimate out = mean_part;
  out.aux.clear();
  out.aux["mean_norm"] = norm2(mean_part.grad);
  out.aux["variability_norm"] = 0.0;
  out.aux["degenerate_downgrade"] = 0.0;

  if (lambda > 0.0) {
    try {
      const GradientEstimate vari = dispatch_variability(kind, batch, cfg);
      axpy(-lambda, vari.grad, out.grad);
      for (std::size_t i = 0; i < out.per_trajectory.size(); ++i)
        axpy(-lambda, vari.per_trajectory[i], out.per_trajectory[i]);
      out.aux["variability_norm"] = norm2(vari.grad);
    } catch (const degenerate_scale_error&) {
      out.aux["degenerate_downgrade"] = 1.0;
    }
  }
  out.aux["grad_variance_diag"] = contribution_variance(out.per_trajectory, out.grad);
  return out;
}

}  // namespace varpg
