#ifndef VARPG_VERIFICATION_HPP
#define VARPG_VERIFICATION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "varpg/oracle.hpp"
#include "varpg/types.hpp"

namespace varpg {

struct CheckResult {
  std::string name;
  bool pass = false;
  bool gating = true;  // informational rows don't affect the suite verdict
  std::string details;
};

struct SuiteResult {
  std::string suite;
  std::vector<CheckResult> checks;
  bool all_pass() const {
    for (const CheckResult& c : checks)
      if (c.gating && !c.pass) return false;
    return true;
  }
};

// Two-arm softmax bandit with returns {0, 1}; the closed-form test bed
// (GD = p(1-p), MD = 2p(1-p), V = p(1-p), SV = p^2 (1-p)).
DiscreteMdp make_bernoulli_bandit();

// Two-arm bandit whose per-arm rewards are a Gaussian grid discretized to
// `points_per_arm` atoms (oracle-friendly stand-in for a continuous return).
DiscreteMdp make_smoothed_bandit(std::size_t points_per_arm);

// Oracle hooks for the tabular softmax policy.
OraclePolicy make_softmax_oracle_policy(std::size_t n_states, std::size_t n_actions);

// Mean-of-estimator vs finite-difference oracle, 3 standard errors per
// coordinate, for the Table-1 unbiased rows on the Bernoulli bandit.
SuiteResult run_unbiasedness_suite(std::size_t reps, std::uint64_t seed);

// Bias decay of the MMD and CVaRDev estimators over n in {8,32,128,512}:
// log-log slope within [-1, -0.25] and monotone non-increasing within 2 SE.
SuiteResult run_bias_rate_suite(std::size_t reps, std::uint64_t seed);

// IQR gradient direction against a continuous-mixture quantile oracle.
SuiteResult run_iqr_direction_suite(std::size_t reps, std::uint64_t seed);

// Location invariance, positive homogeneity, sub-additivity, standardization,
// the pinned Variance/IQR counterexamples, and the Glasser bound.
SuiteResult run_coherence_suite(std::size_t batches, std::uint64_t seed);

// Choquet/quantile-representation identities for GiniDev and MMD on random
// atom distributions.
SuiteResult run_quantile_identity_suite(std::size_t cases, std::uint64_t seed);

// Enumeration ground truths: hand-built distributions, Monte Carlo agreement,
// finite-difference step stability.
SuiteResult run_oracle_self_suite(std::uint64_t seed);

// Named bundles for the CLI: estimators | coherence | oracle | all.
std::vector<SuiteResult> run_verification(const std::string& suite, std::uint64_t seed);

}  // namespace varpg

#endif  // VARPG_VERIFICATION_HPP
