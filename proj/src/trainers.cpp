#include "varpg/trainers.hpp"

#include <chrono>
#include <cmath>

#include "varpg/errors.hpp"
#include "varpg/risk_metrics.hpp"

namespace varpg {

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

GradientBatch build_batch(const std::vector<Trajectory>& trajs, const PolicyParams& policy) {
  GradientBatch batch;
  batch.param_dim = policy.dim();
  batch.step_terms.emplace();
  batch.returns.reserve(trajs.size());
  for (const Trajectory& traj : trajs) {
    Vec omega(batch.param_dim, 0.0);
    GradientBatch::StepTerms steps;
    steps.rewards_to_go = traj.rewards_to_go;
    steps.scores.reserve(traj.length());
    for (std::size_t t = 0; t < traj.length(); ++t) {
      SparseVec score = grad_log_prob(policy, traj.states[t], traj.actions[t]);
      score.add_to(omega, 1.0);
      steps.scores.push_back(std::move(score));
    }
    batch.returns.push_back(traj.total_return);
    batch.scores.push_back(std::move(omega));
    batch.step_terms->push_back(std::move(steps));
  }
  return batch;
}

double batch_mean_return(const GradientBatch& batch) {
  double acc = 0.0;
  for (double r : batch.returns) acc += r;
  return acc / static_cast<double>(batch.returns.size());
}

double batch_variability(const MetricKind& kind, const GradientBatch& batch,
                         QuantileMethod qmethod) {
  SampleBatch s;
  s.values = batch.returns;
  return empirical_metric(kind, s, qmethod);
}

// Risk-averse rate of one greedy (argmax) episode; uses a throwaway stream so
// the training RNG is untouched.
double greedy_rate(const GridMaze& maze, const NoiseSpec& noise, const PolicyParams& policy,
                   std::uint64_t seed) {
  Rng rng(seed ^ 0x5851f42d4c957f2dULL);
  const ActionSampler greedy = [&policy](int state, Rng&) {
    const std::vector<double> probs = action_probs(policy, state);
    int best = 0;
    for (std::size_t a = 1; a < probs.size(); ++a)
      if (probs[a] > probs[best]) best = static_cast<int>(a);
    return best;
  };
  const Trajectory traj = rollout_episode(maze, noise, greedy, rng);
  return (traj.reached_goal && !traj.visited_risky) ? 1.0 : 0.0;
}

IterationLog make_log(int iter, const GridMaze& maze, const NoiseSpec& noise,
                      const TrainConfig& cfg, const PolicyParams& policy,
                      const std::vector<Trajectory>& trajs, const GradientBatch& batch,
                      const GradientEstimate& combined, double t0_ms) {
  IterationLog log;
  log.iteration = iter;
  log.mean_return = batch_mean_return(batch);
  log.variability = batch_variability(cfg.metric, batch, cfg.qmethod);
  log.risk_averse_rate = cfg.greedy_rate
                             ? greedy_rate(maze, noise, policy, cfg.seed + static_cast<std::uint64_t>(iter))
                             : risk_averse_rate(trajs);
  log.grad_variance = combined.aux.at("grad_variance_diag");
  log.mean_grad_norm = combined.aux.at("mean_norm");
  log.variability_grad_norm = combined.aux.at("variability_norm");
  log.degenerate_downgrade = combined.aux.at("degenerate_downgrade") != 0.0;
  log.wall_ms = now_ms() - t0_ms;
  return log;
}

void value_step(ValueParams& value, const Trajectory& traj, double lr,
                OptimizerState* adam_state) {
  // gradient of (1/T) sum_t (V(s_t) - R_{tau,t})^2 w.r.t. the value table
  const double len = static_cast<double>(traj.length());
  Vec grad(value.upsilon.size(), 0.0);
  for (std::size_t t = 0; t < traj.length(); ++t) {
    const int s = traj.states[t];
    grad[static_cast<std::size_t>(s)] +=
        2.0 / len * (state_value(value, s) - traj.rewards_to_go[t]);
  }
  if (adam_state) {
    apply_gradient(value.upsilon, *adam_state, grad, false);
  } else {
    axpy(-lr, grad, value.upsilon);
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (iterations < 1 || batch_size < 1 || inner_updates < 1)
    throw invalid_input("TrainConfig: K, n, M must be >= 1");
  if (!(lr_policy > 0.0) || !(lr_value > 0.0))
    throw invalid_input("TrainConfig: learning rates must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw invalid_input("TrainConfig: gamma out of (0,1]");
  if (lambda < 0.0) throw invalid_input("TrainConfig: lambda must be >= 0");
  if (is_clip < 1.0) throw invalid_input("TrainConfig: IS clip zeta must be >= 1");
  if (!(ppo_clip > 0.0 && ppo_clip < 1.0))
    throw invalid_input("TrainConfig: ppo clip range out of (0,1)");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
    throw invalid_input("TrainConfig: gae lambda out of [0,1]");
  if (value_minibatch < 1) throw invalid_input("TrainConfig: value minibatch must be >= 1");
  if (metric.needs_alpha() && !metric.alpha) throw invalid_input("TrainConfig: metric alpha missing");
}

void train_reinforce_variability(const GridMaze& maze, const NoiseSpec& noise,
                                 PolicyParams& policy, ValueParams& value,
                                 const TrainConfig& config, const LogSink& sink) {
  config.validate();
  if (maze.gamma != config.gamma)
    throw invalid_input("train_reinforce_variability: maze.gamma != config.gamma");
  Rng rng(config.seed);
  OptimizerState opt_policy = config.optimizer == OptimizerState::Kind::Adam
                                  ? OptimizerState::adam(config.lr_policy)
                                  : OptimizerState::sgd(config.lr_policy);
  OptimizerState opt_value = OptimizerState::adam(config.lr_value);
  const bool adam = config.optimizer == OptimizerState::Kind::Adam;

  const ActionSampler sampler = [&policy](int state, Rng& r) {
    return sample_action(policy, state, r);
  };

  for (int k = 1; k <= config.iterations; ++k) {
    const double t0 = now_ms();
    const std::vector<Trajectory> trajs =
        rollout_episodes(maze, noise, sampler, static_cast<std::size_t>(config.batch_size), rng);
    const GradientBatch batch = build_batch(trajs, policy);
    const StepTargets targets = returns_and_advantages(trajs, value, config.gamma, std::nullopt);

    CombinedConfig cc;
    cc.qmethod = config.qmethod;
    cc.gamma = config.gamma;
    cc.baselines = &targets.baselines;
    cc.rng = &rng;
    const GradientEstimate combined =
        combined_objective_gradient(config.metric, batch, config.lambda, cc);

    apply_gradient(policy.theta, opt_policy, combined.grad, true);
    for (const Trajectory& traj : trajs)
      value_step(value, traj, config.lr_value, adam ? &opt_value : nullptr);

    if (sink) sink(make_log(k, maze, noise, config, policy, trajs, batch, combined, t0));
  }
}

std::vector<double> is_ratios_clipped(const PolicyParams& old_policy,
                                      const PolicyParams& new_policy,
                                      const std::vector<Trajectory>& trajectories, double zeta) {
  if (zeta < 1.0) throw invalid_input("is_ratios_clipped: zeta must be >= 1");
  std::vector<double> out;
  out.reserve(trajectories.size());
  for (const Trajectory& traj : trajectories) {
    double log_ratio = 0.0;
    for (std::size_t t = 0; t < traj.length(); ++t)
      log_ratio += log_prob(new_policy, traj.states[t], traj.actions[t]) -
                   log_prob(old_policy, traj.states[t], traj.actions[t]);
    // clip in the log domain before exponentiating to dodge overflow
    const double log_zeta = std::log(zeta);
    out.push_back(std::exp(std::min(log_ratio, log_zeta)));
  }
  return out;
}

GradientEstimate ppo_clip_gradient(const std::vector<Trajectory>& trajectories,
                                   const std::vector<std::vector<double>>& advantages,
                                   const PolicyParams& policy,
                                   const std::vector<std::vector<double>>& old_log_probs,
                                   double clip_range) {
  std::size_t total_steps = 0;
  for (const Trajectory& traj : trajectories) total_steps += traj.length();
  if (total_steps == 0) throw invalid_input("ppo_clip_gradient: no steps");

  GradientEstimate e;
  e.grad.assign(policy.dim(), 0.0);
  e.per_trajectory.assign(trajectories.size(), Vec(policy.dim(), 0.0));
  const double n_traj = static_cast<double>(trajectories.size());
  const double inv_steps = 1.0 / static_cast<double>(total_steps);
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const Trajectory& traj = trajectories[i];
    for (std::size_t t = 0; t < traj.length(); ++t) {
      const double adv = advantages[i][t];
      if (adv == 0.0) continue;
      const double ratio =
          std::exp(log_prob(policy, traj.states[t], traj.actions[t]) - old_log_probs[i][t]);
      const bool clipped = (adv >= 0.0 && ratio > 1.0 + clip_range) ||
                           (adv < 0.0 && ratio < 1.0 - clip_range);
      if (clipped) continue;
      grad_log_prob(policy, traj.states[t], traj.actions[t])
          .add_to(e.per_trajectory[i], n_traj * inv_steps * adv * ratio);
    }
  }
  const double inv_n = 1.0 / n_traj;
  for (const Vec& c : e.per_trajectory) axpy(inv_n, c, e.grad);
  return e;
}

void train_ppo_variability(const GridMaze& maze, const NoiseSpec& noise, PolicyParams& policy,
                           ValueParams& value, const TrainConfig& config, const LogSink& sink) {
  config.validate();
  if (maze.gamma != config.gamma)
    throw invalid_input("train_ppo_variability: maze.gamma != config.gamma");
  Rng rng(config.seed);
  OptimizerState opt_policy = config.optimizer == OptimizerState::Kind::Adam
                                  ? OptimizerState::adam(config.lr_policy)
                                  : OptimizerState::sgd(config.lr_policy);
  OptimizerState opt_value = OptimizerState::adam(config.lr_value);
  const bool adam = config.optimizer == OptimizerState::Kind::Adam;

  const ActionSampler sampler = [&policy](int state, Rng& r) {
    return sample_action(policy, state, r);
  };

  for (int k = 1; k <= config.iterations; ++k) {
    const double t0 = now_ms();
    const std::vector<Trajectory> trajs =
        rollout_episodes(maze, noise, sampler, static_cast<std::size_t>(config.batch_size), rng);
    const PolicyParams old_policy = policy;  // theta_hat

    std::vector<std::vector<double>> old_log_probs;
    old_log_probs.reserve(trajs.size());
    for (const Trajectory& traj : trajs) {
      std::vector<double> lp(traj.length());
      for (std::size_t t = 0; t < traj.length(); ++t)
        lp[t] = log_prob(old_policy, traj.states[t], traj.actions[t]);
      old_log_probs.push_back(std::move(lp));
    }
    const StepTargets targets =
        returns_and_advantages(trajs, value, config.gamma, config.gae_lambda);

    IterationLog first_epoch_log;
    for (int m = 1; m <= config.inner_updates; ++m) {
      GradientBatch batch = build_batch(trajs, policy);
      if (config.lambda > 0.0)
        batch.is_ratios = is_ratios_clipped(old_policy, policy, trajs, config.is_clip);

      const GradientEstimate ppo_grad =
          ppo_clip_gradient(trajs, targets.advantages, policy, old_log_probs, config.ppo_clip);

      CombinedConfig cc;
      cc.qmethod = config.qmethod;
      cc.gamma = config.gamma;
      cc.mean_override = &ppo_grad;
      cc.rng = &rng;
      const GradientEstimate combined =
          combined_objective_gradient(config.metric, batch, config.lambda, cc);

      apply_gradient(policy.theta, opt_policy, combined.grad, true);

      // minibatch value fitting over steps in fixed trajectory order
      Vec grad(value.upsilon.size(), 0.0);
      int in_batch = 0;
      auto flush = [&](int count) {
        if (count == 0) return;
        scale(grad, 1.0 / static_cast<double>(count));
        if (adam) {
          apply_gradient(value.upsilon, opt_value, grad, false);
        } else {
          axpy(-config.lr_value, grad, value.upsilon);
        }
        std::fill(grad.begin(), grad.end(), 0.0);
      };
      for (const Trajectory& traj : trajs) {
        for (std::size_t t = 0; t < traj.length(); ++t) {
          const int s = traj.states[t];
          grad[static_cast<std::size_t>(s)] +=
              2.0 * (state_value(value, s) - traj.rewards_to_go[t]);
          if (++in_batch == config.value_minibatch) {
            flush(in_batch);
            in_batch = 0;
          }
        }
      }
      flush(in_batch);

      if (m == 1)
        first_epoch_log = make_log(k, maze, noise, config, policy, trajs, batch, combined, t0);
    }
    if (sink) {
      first_epoch_log.wall_ms = now_ms() - t0;
      sink(first_epoch_log);
    }
  }
}

}  // namespace varpg
