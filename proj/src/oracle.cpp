#include "varpg/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "varpg/errors.hpp"
#include "varpg/risk_metrics.hpp"

namespace varpg {

namespace {

struct Enumerator {
  const DiscreteMdp& mdp;
  const OraclePolicy& policy;
  const Vec& theta;
  std::size_t budget;
  std::size_t paths = 0;
  std::vector<AtomDistribution::Atom> atoms;

  void expand(int state, int depth, double prob, double disc_return, double gamma_t) {
    if (depth >= mdp.horizon) {
      emit(prob, disc_return);
      return;
    }
    const std::vector<double> probs = policy.probs(theta, state);
    for (int a = 0; a < mdp.n_actions; ++a) {
      if (probs[a] <= 0.0) continue;
      for (const auto& out : mdp.outcomes[state][a]) {
        if (out.probability <= 0.0) continue;
        const double p = prob * probs[a] * out.probability;
        const double g = disc_return + gamma_t * out.reward;
        if (out.terminal) {
          emit(p, g);
        } else {
          expand(out.next_state, depth + 1, p, g, gamma_t * mdp.gamma);
        }
      }
    }
  }

  void emit(double prob, double value) {
    if (++paths > budget)
      throw oracle_budget_error("enumerate_return_distribution: path budget exceeded");
    atoms.push_back({value, prob});
  }
};

}  // namespace

AtomDistribution enumerate_return_distribution(const DiscreteMdp& mdp, const OraclePolicy& policy,
                                               const Vec& theta, std::size_t budget) {
  Enumerator en{mdp, policy, theta, budget, 0, {}};
  en.expand(mdp.initial_state, 0, 1.0, 0.0, 1.0);

  std::sort(en.atoms.begin(), en.atoms.end(),
            [](const auto& a, const auto& b) { return a.value < b.value; });
  AtomDistribution dist;
  for (const auto& atom : en.atoms) {
    if (!dist.atoms.empty() && atom.value - dist.atoms.back().value <= 1e-12)
      dist.atoms.back().probability += atom.probability;
    else
      dist.atoms.push_back(atom);
  }
  dist.validate(1e-9);
  return dist;
}

Vec finite_diff_gradient(const MetricKind& kind, const DiscreteMdp& mdp,
                         const OraclePolicy& policy, const Vec& theta, double h,
                         std::size_t budget) {
  Vec grad(theta.size(), 0.0);
  Vec probe = theta;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    probe[k] = theta[k] + h;
    const double up = exact_metric_on_atoms(
        kind, enumerate_return_distribution(mdp, policy, probe, budget),
        QuantileMethod::LowerOrderStat);
    probe[k] = theta[k] - h;
    const double down = exact_metric_on_atoms(
        kind, enumerate_return_distribution(mdp, policy, probe, budget),
        QuantileMethod::LowerOrderStat);
    probe[k] = theta[k];
    grad[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

namespace {

int sample_index(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace

GradientBatch sample_gradient_batch(const DiscreteMdp& mdp, const OraclePolicy& policy,
                                    const Vec& theta, std::size_t n, Rng& rng) {
  GradientBatch batch;
  batch.param_dim = policy.param_dim;
  batch.step_terms.emplace();
  for (std::size_t i = 0; i < n; ++i) {
    int state = mdp.initial_state;
    double disc_return = 0.0, gamma_t = 1.0;
    Vec omega(policy.param_dim, 0.0);
    GradientBatch::StepTerms steps;
    std::vector<double> rewards;
    for (int depth = 0; depth < mdp.horizon; ++depth) {
      const std::vector<double> probs = policy.probs(theta, state);
      const int a = sample_index(probs, rng);
      const auto& branches = mdp.outcomes[state][a];
      std::vector<double> branch_probs;
      branch_probs.reserve(branches.size());
      for (const auto& out : branches) branch_probs.push_back(out.probability);
      const auto& out = branches[sample_index(branch_probs, rng)];

      const SparseVec score = policy.score(theta, state, a);
      score.add_to(omega, 1.0);
      steps.scores.push_back(score);
      rewards.push_back(out.reward);
      disc_return += gamma_t * out.reward;
      gamma_t *= mdp.gamma;
      state = out.next_state;
      if (out.terminal) break;
    }
    steps.rewards_to_go.assign(rewards.size(), 0.0);
    double rtg = 0.0;
    for (std::size_t t = rewards.size(); t-- > 0;) {
      rtg = rewards[t] + mdp.gamma * rtg;
      steps.rewards_to_go[t] = rtg;
    }
    batch.returns.push_back(disc_return);
    batch.scores.push_back(std::move(omega));
    batch.step_terms->push_back(std::move(steps));
  }
  return batch;
}

double monte_carlo_mean_return(const DiscreteMdp& mdp, const OraclePolicy& policy,
                               const Vec& theta, std::size_t reps, Rng& rng) {
  double acc = 0.0;
  for (std::size_t i = 0; i < reps; ++i)
    acc += sample_gradient_batch(mdp, policy, theta, 1, rng).returns[0];
  return acc / static_cast<double>(reps);
}

std::vector<BiasPoint> estimator_bias_curve(
    const std::function<GradientEstimate(const GradientBatch&, Rng&)>& estimator,
    const DiscreteMdp& mdp, const OraclePolicy& policy, const Vec& theta, const Vec& oracle_grad,
    const std::vector<std::size_t>& sizes, std::size_t reps, Rng& rng) {
  std::vector<BiasPoint> out;
  const std::size_t dim = oracle_grad.size();
  for (std::size_t n : sizes) {
    Vec sum(dim, 0.0), sum_sq(dim, 0.0);
    for (std::size_t r = 0; r < reps; ++r) {
      const GradientBatch batch = sample_gradient_batch(mdp, policy, theta, n, rng);
      const GradientEstimate est = estimator(batch, rng);
      for (std::size_t d = 0; d < dim; ++d) {
        sum[d] += est.grad[d];
        sum_sq[d] += est.grad[d] * est.grad[d];
      }
    }
    Vec err(dim, 0.0);
    double bias = 0.0;
    const double nr = static_cast<double>(reps);
    for (std::size_t d = 0; d < dim; ++d) {
      err[d] = sum[d] / nr - oracle_grad[d];
      bias += err[d] * err[d];
    }
    bias = std::sqrt(bias);
    // Delta method: Var(||e||) ~ sum_d (u_d sd_d)^2 / reps with u = e/||e||.
    double se_sq = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double var_d = std::max(0.0, sum_sq[d] / nr - (sum[d] / nr) * (sum[d] / nr));
      const double u = bias > 0.0 ? err[d] / bias : 1.0 / std::sqrt(static_cast<double>(dim));
      se_sq += u * u * var_d / nr;
    }
    out.push_back({n, bias, std::sqrt(se_sq)});
  }
  return out;
}

double log_log_slope(const std::vector<BiasPoint>& points) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double m = static_cast<double>(points.size());
  for (const BiasPoint& p : points) {
    const double x = std::log(static_cast<double>(p.n));
    const double y = std::log(std::max(p.bias, 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace varpg
