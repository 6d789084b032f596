#ifndef VARPG_GRAD_ESTIMATORS_HPP
#define VARPG_GRAD_ESTIMATORS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "varpg/linalg.hpp"
#include "varpg/rng.hpp"
#include "varpg/types.hpp"

namespace varpg {

// Sparse parameter vector; per-step policy scores touch one state block only.
struct SparseVec {
  std::vector<std::uint32_t> idx;
  std::vector<double> val;

  void add_to(Vec& dense, double scale) const {
    for (std::size_t k = 0; k < idx.size(); ++k) dense[idx[k]] += scale * val[k];
  }
};

// Trajectory-level statistics consumed by every gradient estimator. The
// estimators never see the policy representation, only returns and scores.
struct GradientBatch {
  std::vector<double> returns;     // R_tau_i
  std::vector<Vec> scores;         // omega_i = sum_t grad log pi, dense

  struct StepTerms {
    std::vector<SparseVec> scores;      // grad log pi(a_t|s_t) per step
    std::vector<double> rewards_to_go;  // R_{tau,t}
  };
  std::optional<std::vector<StepTerms>> step_terms;  // for the mean REINFORCE term
  std::optional<std::vector<double>> is_ratios;      // clipped rho_i, in (0, zeta]
  std::size_t param_dim = 0;

  std::size_t size() const { return returns.size(); }
  double rho(std::size_t i) const { return is_ratios ? (*is_ratios)[i] : 1.0; }
  void validate() const;
};

struct GradientEstimate {
  Vec grad;
  std::map<std::string, double> aux;
  // Per-trajectory contributions c_i with mean_i(c_i) == grad; feeds the
  // gradient-variance diagnostic.
  std::vector<Vec> per_trajectory;
};

// Disjoint index sets covering the batch, for double-sampling products.
struct DoubleSamplingSplit {
  std::vector<std::size_t> set_a;
  std::vector<std::size_t> set_b;
  void validate(std::size_t n) const;
};

// Uniform random partition into halves of size floor(n/2) / ceil(n/2).
DoubleSamplingSplit split_double_sampling(std::size_t n, Rng& rng);

// (1/n) sum_i rho_i R_i omega_i; the plain score-function mean gradient.
GradientEstimate grad_mean_plain(const GradientBatch& batch);

// REINFORCE with baseline:
// (1/n) sum_i sum_t grad log pi(a_it|s_it) gamma^t (R_{tau_i,t} - V(s_it)).
// `baselines[i][t]` holds V(s_it); requires step_terms.
GradientEstimate grad_mean_reinforce(const GradientBatch& batch,
                                     const std::vector<std::vector<double>>& baselines,
                                     double gamma);

// Variance gradient with double sampling: the gradient-bearing sums run over
// set A, the scalar mean over set B.
GradientEstimate grad_variance(const GradientBatch& batch, const DoubleSamplingSplit& split);

// Variance gradient scaled by 1 / (2 sqrt(Vhat)) with Vhat from the full batch.
GradientEstimate grad_std(const GradientBatch& batch, const DoubleSamplingSplit& split);

// Gini deviation gradient, single sample set:
//   eta_i = (2 / W_-i) sum_{j != i} rho_j max(R_j, R_i) - (b + R_i)
// with b = `upper_bound` if given, else the batch max return.
GradientEstimate grad_gini(const GradientBatch& batch,
                           std::optional<double> upper_bound = std::nullopt);

// Mean deviation gradient with leave-one-out means on set A and the mean
// gradient estimated from set B; sgn(0) = 0.
GradientEstimate grad_mean_dev(const GradientBatch& batch, const DoubleSamplingSplit& split);

// Mean-median deviation gradient around the empirical half quantile
// (IS-weighted when ratios are present). Ties at the quantile enter both
// indicator sums. Biased, consistent.
GradientEstimate grad_mmd(const GradientBatch& batch, QuantileMethod qmethod,
                          std::optional<double> upper_bound = std::nullopt);

// Inter-quantile-range gradient; KDE density at both empirical quantiles.
GradientEstimate grad_iqr(const GradientBatch& batch, double alpha, QuantileMethod qmethod);

// Lower-tail CVaR deviation gradient: mean gradient minus the tail term.
GradientEstimate grad_cvar_dev(const GradientBatch& batch, double alpha, QuantileMethod qmethod);

// Semi-variance gradient, double sampling as for the variance.
GradientEstimate grad_semivar(const GradientBatch& batch, const DoubleSamplingSplit& split);

// Semi-variance gradient scaled by 1 / (2 sqrt(SVhat)) from the full batch.
GradientEstimate grad_semistd(const GradientBatch& batch, const DoubleSamplingSplit& split);

struct CombinedConfig {
  QuantileMethod qmethod = QuantileMethod::LowerOrderStat;
  double gamma = 1.0;
  // Mean term: either REINFORCE-with-baseline data or a precomputed gradient
  // (the PPO surrogate). Exactly one should be set.
  const std::vector<std::vector<double>>* baselines = nullptr;
  const GradientEstimate* mean_override = nullptr;
  Rng* rng = nullptr;  // split source when the metric needs double sampling
  std::optional<double> upper_bound;
};

// mean_grad - lambda * variability_grad with per-metric dispatch. On a
// degenerate-scale error the variability term is dropped for this update and
// aux["degenerate_downgrade"] is set. aux carries component norms and the
// per-update gradient-variance diagnostic.
GradientEstimate combined_objective_gradient(const MetricKind& kind, const GradientBatch& batch,
                                             double lambda, const CombinedConfig& cfg);

}  // namespace varpg

#endif  // VARPG_GRAD_ESTIMATORS_HPP
