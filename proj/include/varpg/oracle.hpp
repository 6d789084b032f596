#ifndef VARPG_ORACLE_HPP
#define VARPG_ORACLE_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "varpg/grad_estimators.hpp"
#include "varpg/rng.hpp"
#include "varpg/types.hpp"

namespace varpg {

// Tiny finite MDP for brute-force verification: tabular dynamics with finite
// reward supports per (state, action) outcome.
struct DiscreteMdp {
  struct Outcome {
    double probability = 1.0;
    int next_state = 0;
    double reward = 0.0;
    bool terminal = true;
  };
  int n_states = 1;
  int n_actions = 2;
  int initial_state = 0;
  int horizon = 1;
  double gamma = 1.0;
  // outcomes[s][a] lists the stochastic branches; probabilities sum to 1.
  std::vector<std::vector<std::vector<Outcome>>> outcomes;
};

// Policy hooks the oracle needs: action probabilities and the score of one
// (state, action) pair at parameter vector theta.
struct OraclePolicy {
  std::function<std::vector<double>(const Vec& theta, int state)> probs;
  std::function<SparseVec(const Vec& theta, int state, int action)> score;
  std::size_t param_dim = 0;
};

// Exact law of the discounted return by exhaustive (trajectory x noise)
// expansion. Atom values within 1e-12 are merged. Throws oracle_budget_error
// when the number of expanded paths would exceed `budget`.
AtomDistribution enumerate_return_distribution(const DiscreteMdp& mdp, const OraclePolicy& policy,
                                               const Vec& theta, std::size_t budget = 1000000);

// Central finite differences of exact_metric_on_atoms over the enumerated
// distribution, coordinate-wise (LowerOrderStat quantiles).
Vec finite_diff_gradient(const MetricKind& kind, const DiscreteMdp& mdp,
                         const OraclePolicy& policy, const Vec& theta, double h = 1e-5,
                         std::size_t budget = 1000000);

// Sample one batch of n trajectories from the MDP under the policy; fills
// returns, whole-trajectory scores, and step terms.
GradientBatch sample_gradient_batch(const DiscreteMdp& mdp, const OraclePolicy& policy,
                                    const Vec& theta, std::size_t n, Rng& rng);

// Monte Carlo mean return over `reps` rollouts (oracle self-consistency).
double monte_carlo_mean_return(const DiscreteMdp& mdp, const OraclePolicy& policy,
                               const Vec& theta, std::size_t reps, Rng& rng);

struct BiasPoint {
  std::size_t n = 0;
  double bias = 0.0;  // || mean estimate - oracle gradient ||_2
  double se = 0.0;    // delta-method standard error of the bias
};

// Mean estimator error against `oracle_grad` for each batch size, averaged
// over `reps` independent batches.
std::vector<BiasPoint> estimator_bias_curve(
    const std::function<GradientEstimate(const GradientBatch&, Rng&)>& estimator,
    const DiscreteMdp& mdp, const OraclePolicy& policy, const Vec& theta, const Vec& oracle_grad,
    const std::vector<std::size_t>& sizes, std::size_t reps, Rng& rng);

// Least-squares slope of log(bias) against log(n).
double log_log_slope(const std::vector<BiasPoint>& points);

}  // namespace varpg

#endif  // VARPG_ORACLE_HPP
