#pragma once

#include <nlohmann/json_fwd.hpp>

#include <optional>

#include "irl/mdp.hpp"
#include "irl/reward.hpp"
#include "irl/rollout.hpp"

namespace irl {

/// Objective values at one theta. `empirical` is the plug-in log-likelihood of
/// the dataset; it splits exactly into `t1 + t2`. `exact` is present only when
/// the expert policy was supplied.
struct LikelihoodReport {
  std::optional<double> exact;
  double surrogate = 0.0;
  double empirical = 0.0;
  double t1 = 0.0;  // feature term minus V at the dataset's initial states (plus truncation tail)
  double t2 = 0.0;  // expected-vs-sampled successor value mismatch
};

void to_json(nlohmann::json& j, const LikelihoodReport& r);

/// (1/(1-gamma)) sum_{s,a} d(s,a) phi(s,a): the discounted feature expectation
/// represented by an occupancy table.
VectorD occupancy_feature_expectation(const FeatureMap& fm, const TableD& d, double gamma);

/// Discounted feature expectation of a policy, E_pi[sum_t gamma^t phi(s_t, a_t)].
VectorD model_feature_expectation(const Mdp& mdp, const FeatureMap& fm, const PolicyD& policy);

/// L(theta) = (1/(1-gamma)) sum d^E r(theta) - E_rho[V_theta], with the expert
/// occupancy computed exactly. Cross-checked against the log-policy form; a
/// disagreement above 1e-7 throws NumericError.
double exact_likelihood(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                        const PolicyD& expert, double tol = 1e-11);

/// L(theta) = (1/(1-gamma)) sum d^E(s,a) log pi_theta(a|s).
double exact_likelihood_via_log_policy(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                                       const PolicyD& expert, double tol = 1e-11);

/// <expert_features, theta> - E_rho[V_theta].
double surrogate_likelihood(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                            const VectorD& expert_features, double tol = 1e-11);
double surrogate_likelihood(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                            const Dataset& data, double tol = 1e-11);

/// Plug-in likelihood of the dataset together with its T1/T2 split. Requires every
/// trajectory to carry its successor state.
LikelihoodReport empirical_decomposition(const Mdp& mdp, const FeatureMap& fm,
                                         const VectorD& theta, const Dataset& data,
                                         const PolicyD* expert = nullptr, double tol = 1e-11);

/// Phi_E - Phi_theta.
VectorD exact_gradient(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                       const OccupancyD& expert_occ, double tol = 1e-11);
VectorD exact_gradient(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                       const Dataset& data, double tol = 1e-11);
VectorD exact_gradient_from_features(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                                     const VectorD& expert_features, double tol = 1e-11);

/// C_r / (1 - gamma) * sqrt(ln(2/delta) / (2 n)).
double concentration_bound(double c_r, double gamma, double delta, long n);

}  // namespace irl
