#ifndef VARPG_TRAINERS_HPP
#define VARPG_TRAINERS_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "varpg/grad_estimators.hpp"
#include "varpg/softmax_policy.hpp"
#include "varpg/tabular_env.hpp"
#include "varpg/types.hpp"

namespace varpg {

struct TrainConfig {
  MetricKind metric = MetricKind::make(Metric::GiniDev);
  double lambda = 0.0;
  int iterations = 3000;    // K
  int batch_size = 50;      // n episodes per update
  int inner_updates = 1;    // M (PPO)
  double lr_policy = 1e-3;
  double lr_value = 1e-2;   // defaults to 10x the policy rate
  double gamma = 0.999;
  double is_clip = 10.0;    // zeta
  double ppo_clip = 0.2;
  double gae_lambda = 0.95;
  int value_minibatch = 64;  // steps per value minibatch (PPO)
  QuantileMethod qmethod = QuantileMethod::LinearInterpolation;
  OptimizerState::Kind optimizer = OptimizerState::Kind::Sgd;
  std::uint64_t seed = 1;
  bool greedy_rate = false;  // risk-averse rate from a greedy rollout instead
                             // of the training batch

  void validate() const;
};

struct IterationLog {
  int iteration = 0;
  double mean_return = 0.0;
  double variability = 0.0;       // point estimate of the configured metric
  double risk_averse_rate = 0.0;
  double grad_variance = 0.0;     // per-coordinate variance of per-trajectory
                                  // combined-gradient contributions, averaged
  double mean_grad_norm = 0.0;
  double variability_grad_norm = 0.0;
  bool degenerate_downgrade = false;
  double wall_ms = 0.0;  // excluded from CSV rows; totals go to the manifest
};

using LogSink = std::function<void(const IterationLog&)>;

// Algorithm: sample n episodes, REINFORCE-with-baseline mean gradient,
// metric-specific variability gradient (double-sampling split when required),
// ascend theta by lr * (mean - lambda * variability), then per-trajectory
// squared-error descent on the value table.
void train_reinforce_variability(const GridMaze& maze, const NoiseSpec& noise,
                                 PolicyParams& policy, ValueParams& value,
                                 const TrainConfig& config, const LogSink& sink);

// PPO variant: GAE advantages once per iteration, M inner epochs of
// PPO-clip surrogate gradient plus the variability gradient under clipped
// per-trajectory IS ratios and IS-weighted quantiles.
void train_ppo_variability(const GridMaze& maze, const NoiseSpec& noise, PolicyParams& policy,
                           ValueParams& value, const TrainConfig& config, const LogSink& sink);

// exp(sum_t log pi_new - log pi_old) per trajectory, clipped above at zeta.
std::vector<double> is_ratios_clipped(const PolicyParams& old_policy,
                                      const PolicyParams& new_policy,
                                      const std::vector<Trajectory>& trajectories, double zeta);

// Gradient of the mean PPO-clip surrogate min(r A, clip(r, 1 +- eps) A) over
// all steps. per_trajectory contributions are scaled so their mean is grad.
GradientEstimate ppo_clip_gradient(const std::vector<Trajectory>& trajectories,
                                   const std::vector<std::vector<double>>& advantages,
                                   const PolicyParams& policy,
                                   const std::vector<std::vector<double>>& old_log_probs,
                                   double clip_range);

}  // namespace varpg

#endif  // VARPG_TRAINERS_HPP
