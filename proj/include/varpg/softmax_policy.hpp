#ifndef VARPG_SOFTMAX_POLICY_HPP
#define VARPG_SOFTMAX_POLICY_HPP

#include <optional>
#include <string>
#include <vector>

#include "varpg/grad_estimators.hpp"
#include "varpg/linalg.hpp"
#include "varpg/rng.hpp"
#include "varpg/tabular_env.hpp"

namespace varpg {

// Tabular softmax policy over one-hot (state, action) features:
// pi(a|s) = exp(theta[s,a]) / sum_b exp(theta[s,b]).
struct PolicyParams {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  Vec theta;  // length n_states * n_actions

  std::size_t dim() const { return n_states * n_actions; }
  static PolicyParams zeros(std::size_t n_states, std::size_t n_actions);
};

// Softmax of the per-action logits, stabilized by max subtraction.
std::vector<double> action_probs(const PolicyParams& params, int state);
int sample_action(const PolicyParams& params, int state, Rng& rng);
double log_prob(const PolicyParams& params, int state, int action);

// grad log pi(a|s) = onehot(s,a) - sum_b pi(b|s) onehot(s,b); nonzero only in
// state s's action block.
SparseVec grad_log_prob(const PolicyParams& params, int state, int action);

// Linear state-value baseline V(s) = upsilon[s] over one-hot state features.
struct ValueParams {
  Vec upsilon;
  static ValueParams zeros(std::size_t n_states);
};

double state_value(const ValueParams& params, int state);

struct OptimizerState {
  enum class Kind { Sgd, Adam } kind = Kind::Sgd;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Vec m, v;   // Adam moments, sized lazily
  long step = 0;

  static OptimizerState sgd(double lr);
  static OptimizerState adam(double lr);
};

// One first-order step: ascent ? params += ... : params -= ...
void apply_gradient(Vec& params, OptimizerState& opt, const Vec& grad, bool ascent);

// Per-step baselines V(s_t) and advantages for a trajectory batch. Without
// gae_lambda the advantage is R_{tau,t} - V(s_t); with it, the GAE(lambda)
// recursion over TD residuals with terminal bootstrap 0.
struct StepTargets {
  std::vector<std::vector<double>> baselines;
  std::vector<std::vector<double>> advantages;
};

StepTargets returns_and_advantages(const std::vector<Trajectory>& trajectories,
                                   const ValueParams& vparams, double gamma,
                                   std::optional<double> gae_lambda);

// Text checkpoint (round-trip exact): header + flat parameter arrays.
void save_checkpoint(const std::string& path, const PolicyParams& policy,
                     const ValueParams& value);
bool load_checkpoint(const std::string& path, PolicyParams& policy, ValueParams& value);

}  // namespace varpg

#endif  // VARPG_SOFTMAX_POLICY_HPP
