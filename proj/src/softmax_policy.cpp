#include "varpg/softmax_policy.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "varpg/errors.hpp"

namespace varpg {

PolicyParams PolicyParams::zeros(std::size_t n_states, std::size_t n_actions) {
  PolicyParams p;
  p.n_states = n_states;
  p.n_actions = n_actions;
  p.theta.assign(n_states * n_actions, 0.0);
  return p;
}

ValueParams ValueParams::zeros(std::size_t n_states) {
  ValueParams v;
  v.upsilon.assign(n_states, 0.0);
  return v;
}

std::vector<double> action_probs(const PolicyParams& params, int state) {
  const std::size_t base = static_cast<std::size_t>(state) * params.n_actions;
  double max_logit = params.theta[base];
  for (std::size_t a = 1; a < params.n_actions; ++a)
    max_logit = std::max(max_logit, params.theta[base + a]);
  std::vector<double> probs(params.n_actions);
  double sum = 0.0;
  for (std::size_t a = 0; a < params.n_actions; ++a) {
    probs[a] = std::exp(params.theta[base + a] - max_logit);
    sum += probs[a];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

int sample_action(const PolicyParams& params, int state, Rng& rng) {
  const std::vector<double> probs = action_probs(params, state);
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t a = 0; a + 1 < probs.size(); ++a) {
    acc += probs[a];
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(probs.size()) - 1;
}

double log_prob(const PolicyParams& params, int state, int action) {
  const std::size_t base = static_cast<std::size_t>(state) * params.n_actions;
  double max_logit = params.theta[base];
  for (std::size_t a = 1; a < params.n_actions; ++a)
    max_logit = std::max(max_logit, params.theta[base + a]);
  double sum = 0.0;
  for (std::size_t a = 0; a < params.n_actions; ++a)
    sum += std::exp(params.theta[base + a] - max_logit);
  return params.theta[base + action] - max_logit - std::log(sum);
}

SparseVec grad_log_prob(const PolicyParams& params, int state, int action) {
  const std::vector<double> probs = action_probs(params, state);
  const std::size_t base = static_cast<std::size_t>(state) * params.n_actions;
  SparseVec g;
  g.idx.reserve(params.n_actions);
  g.val.reserve(params.n_actions);
  for (std::size_t a = 0; a < params.n_actions; ++a) {
    g.idx.push_back(static_cast<std::uint32_t>(base + a));
    g.val.push_back((static_cast<int>(a) == action ? 1.0 : 0.0) - probs[a]);
  }
  return g;
}

double state_value(const ValueParams& params, int state) {
  return params.upsilon[static_cast<std::size_t>(state)];
}

OptimizerState OptimizerState::sgd(double lr) {
  OptimizerState o;
  o.kind = Kind::Sgd;
  o.learning_rate = lr;
  return o;
}

OptimizerState OptimizerState::adam(double lr) {
  OptimizerState o;
  o.kind = Kind::Adam;
  o.learning_rate = lr;
  return o;
}

void apply_gradient(Vec& params, OptimizerState& opt, const Vec& grad, bool ascent) {
  if (params.size() != grad.size()) throw invalid_input("apply_gradient: dimension mismatch");
  const double sign = ascent ? 1.0 : -1.0;
  if (opt.kind == OptimizerState::Kind::Sgd) {
    axpy(sign * opt.learning_rate, grad, params);
    return;
  }
  if (opt.m.size() != params.size()) {
    opt.m.assign(params.size(), 0.0);
    opt.v.assign(params.size(), 0.0);
    opt.step = 0;
  }
  ++opt.step;
  const double b1t = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double b2t = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * grad[i];
    opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
    const double m_hat = opt.m[i] / b1t;
    const double v_hat = opt.v[i] / b2t;
    params[i] += sign * opt.learning_rate * m_hat / (std::sqrt(v_hat) + opt.eps);
  }
}

StepTargets returns_and_advantages(const std::vector<Trajectory>& trajectories,
                                   const ValueParams& vparams, double gamma,
                                   std::optional<double> gae_lambda) {
  StepTargets out;
  out.baselines.reserve(trajectories.size());
  out.advantages.reserve(trajectories.size());
  for (const Trajectory& traj : trajectories) {
    const std::size_t len = traj.length();
    std::vector<double> base(len), adv(len);
    for (std::size_t t = 0; t < len; ++t) base[t] = state_value(vparams, traj.states[t]);
    if (!gae_lambda) {
      for (std::size_t t = 0; t < len; ++t) adv[t] = traj.rewards_to_go[t] - base[t];
    } else {
      // delta_t = r_{t+1} + gamma V(s_{t+1}) - V(s_t), bootstrap 0 at the end.
      double accum = 0.0;
      for (std::size_t t = len; t-- > 0;) {
        const double next_v = (t + 1 < len) ? state_value(vparams, traj.states[t + 1]) : 0.0;
        const double delta = traj.rewards[t] + gamma * next_v - base[t];
        accum = delta + gamma * (*gae_lambda) * accum;
        adv[t] = accum;
      }
    }
    out.baselines.push_back(std::move(base));
    out.advantages.push_back(std::move(adv));
  }
  return out;
}

void save_checkpoint(const std::string& path, const PolicyParams& policy,
                     const ValueParams& value) {
  std::ofstream out(path);
  if (!out) throw invalid_input("save_checkpoint: cannot open " + path);
  out << "varpg-checkpoint v1\n";
  out << policy.n_states << " " << policy.n_actions << "\n";
  char buf[64];
  out << "theta\n";
  for (double x : policy.theta) {
    std::snprintf(buf, sizeof buf, "%.17g\n", x);
    out << buf;
  }
  out << "upsilon\n";
  for (double x : value.upsilon) {
    std::snprintf(buf, sizeof buf, "%.17g\n", x);
    out << buf;
  }
}

bool load_checkpoint(const std::string& path, PolicyParams& policy, ValueParams& value) {
  std::ifstream in(path);
  if (!in) return false;
  std::string header, tag;
  std::getline(in, header);
  if (header != "varpg-checkpoint v1") return false;
  std::size_t n_states = 0, n_actions = 0;
  in >> n_states >> n_actions >> tag;
  if (tag != "theta") return false;
  policy.n_states = n_states;
  policy.n_actions = n_actions;
  policy.theta.assign(n_states * n_actions, 0.0);
  for (double& x : policy.theta) in >> x;
  in >> tag;
  if (tag != "upsilon") return false;
  value.upsilon.assign(n_states, 0.0);
  for (double& x : value.upsilon) in >> x;
  return static_cast<bool>(in);
}

}  // namespace varpg
