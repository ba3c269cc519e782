#pragma once

// Numerical probes of the theory: gradient identity, duality, concavity,
// contraction, Lipschitz bound, Gumbel-max equivalence, concentration, rate.
// Every probe is deterministic given its seed.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "irl/mdp.hpp"
#include "irl/ml_irl.hpp"
#include "irl/reward.hpp"
#include "irl/rollout.hpp"

namespace irl {

struct ProbeReport {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string instance;
  std::uint64_t seed = 0;
  nlohmann::json details = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const ProbeReport& r);

/// {"passed": all passed, "probes": [...]}.
nlohmann::json verification_manifest(const std::vector<ProbeReport>& reports);

/// Central differences, one coordinate at a time.
VectorD fd_gradient(const std::function<double(const VectorD&)>& objective, const VectorD& theta,
                    double h);

/// ||fd - exact||_2 / ||exact||_2 (absolute when the exact gradient vanishes).
double relative_error(const VectorD& approx, const VectorD& exact);

/// Exact gradient of L_hat against finite differences of L_hat.
ProbeReport gradient_fd_probe(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                              const VectorD& expert_features, double h = 1e-5,
                              double threshold = 1e-5);

// Discounted entropy of pi: -(1/(1-gamma)) sum d(s,a) log pi(a|s).
double discounted_entropy(const Mdp& mdp, const PolicyD& policy);

// E_rho[V_theta] - <Phi_E, theta>.
double dual_value(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                  const VectorD& expert_features, double tol = 1e-12);

struct DualityReport {
  double primal = 0.0;  // discounted entropy of pi_theta
  double dual = 0.0;
  double gap = 0.0;       // |dual - primal|
  double residual = 0.0;  // ||Phi_E - Phi_theta||_inf
  // |<Phi_theta - Phi_E, theta>| <= ||Phi_E - Phi_theta||_2 ||theta||_2: the part of
  // the gap explained by imperfect feature matching.
  double residual_allowance = 0.0;
};

DualityReport duality_gap(const Mdp& mdp, const FeatureMap& fm, const VectorD& expert_features,
                          const VectorD& theta_hat, double tol = 1e-12);
DualityReport duality_gap(const Mdp& mdp, const FeatureMap& fm, const Dataset& data,
                          const VectorD& theta_hat, double tol = 1e-12);

/// Runs exact ML-IRL against `expert` for K iterations, then checks
/// gap <= rel_tol (1 + |dual|) and residual <= res_tol.
ProbeReport duality_probe(const Mdp& mdp, const FeatureMap& fm, const PolicyD& expert, int K,
                          double alpha0 = 1.0, double rel_tol = 1e-3, double res_tol = 1e-3);

/// L_hat(lambda t1 + (1 - lambda) t2) >= lambda L_hat(t1) + (1 - lambda) L_hat(t2) - slack
/// over random (t1, t2, lambda); measured is the worst shortfall.
ProbeReport concavity_probe(const Mdp& mdp, const FeatureMap& fm, const VectorD& expert_features,
                            int n_probes, std::uint64_t seed, double slack = 1e-8,
                            double theta_scale = 2.0);

/// Soft policy iteration against Q_theta. With eps_app > 0, uniform noise of that
/// amplitude perturbs the Q estimate used for each improvement step. Checks per step
///   ||Q_theta - Q^{pi_{k+1}}|| <= gamma ||Q_theta - Q^{pi_k}|| + 2 gamma eps/(1-gamma) + 1e-9,
/// monotone improvement Q^{pi_k} <= Q^{pi_{k+1}} + 1e-9 when eps_app = 0, and the
/// final gap against gamma^n initial + 2 gamma eps / (1-gamma)^2.
ProbeReport contraction_probe(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                              int n_steps, double eps_app = 0.0, std::uint64_t seed = 0);

/// L_q = L_r / (1 - gamma).
double certified_lq(const Mdp& mdp, const FeatureMap& fm);

/// ||Q_t1 - Q_t2||_inf <= L_q ||t1 - t2||_2 + 1e-8 over random pairs.
ProbeReport lipschitz_probe(const Mdp& mdp, const FeatureMap& fm, int n_pairs, std::uint64_t seed,
                            double theta_scale = 2.0);

/// Zero-mean standard Gumbel: -log(-log U) - Euler's gamma.
double sample_gumbel(Rng& rng);

/// Empirical argmax frequencies of q + eps over n draws.
VectorD gumbel_argmax_frequencies(const VectorD& q, long n_samples, std::uint64_t seed);

/// Worst per-state TV distance between Gumbel-argmax frequencies and pi_theta.
/// Threshold max(0.02, 4 sqrt(n_actions / n_samples)).
ProbeReport gumbel_equivalence_check(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                                     long n_samples, std::uint64_t seed);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Slope of log(running average of grad_norm_sq) against log k, k = 1..K,
/// over k >= burn_in_fraction * K. Needs at least 50 usable points.
double rate_check(const IterateLog& log, double burn_in_fraction = 0.1);

/// Mean of policy_gap over the whole log.
double average_policy_gap(const IterateLog& log);

/// Exact-mode ML-IRL against `expert` (q_eval_tol 1e-12); passes when
/// rate_check(log, 0.1) <= max_slope.
ProbeReport rate_probe(const Mdp& mdp, const FeatureMap& fm, const PolicyD& expert, int K,
                       double alpha0 = 1.0, double max_slope = -0.35);

/// P(X <= k) for X ~ Binomial(n, p).
double binomial_cdf(long k, long n, double p);

/// Resamples datasets from `expert` and counts how often |L - L_hat| stays within
/// the concentration bound. Rewards outside [0, c_r] are replaced by a one-hot
/// tabular reward affinely rescaled into [0, c_r] (reported in details).
/// Passes unless a one-sided binomial test at 99% rejects coverage >= 1 - delta.
ProbeReport concentration_coverage(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                                   const PolicyD& expert, int n_resamples, int n_traj,
                                   double delta, std::uint64_t seed, double c_r = 1.0,
                                   int horizon = 0);

}  // namespace irl
