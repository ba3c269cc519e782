#include "irl/maxent_irl.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "irl/likelihood.hpp"

namespace irl {

void MaxEntConfig::validate() const {
  if (outer_iters < 0) throw ConfigError("maxent: outer_iters must be >= 0");
  if (!(inner_tol > 0.0)) throw ConfigError("maxent: inner_tol must be positive");
  if (!(step_size > 0.0)) throw ConfigError("maxent: step_size must be positive");
}

IrlResult run_maxent_irl(const Mdp& mdp, const FeatureMap& fm, const Dataset& data,
                         const MaxEntConfig& cfg, const PolicyD* expert) {
  cfg.validate();
  if (fm.n_states() != mdp.n_states || fm.n_actions() != mdp.n_actions) {
    throw ShapeError("run_maxent_irl: feature map does not match the MDP");
  }
  if (!expert) {
    if (data.size() == 0) throw ConfigError("run_maxent_irl: expert dataset is empty");
    validate_dataset(data, mdp.n_states, mdp.n_actions);
  }
  const VectorD target = expert
                             ? occupancy_feature_expectation(fm, occupancy(mdp, *expert).d, mdp.gamma)
                             : empirical_feature_expectation(fm, data, mdp.gamma);

  const auto start = std::chrono::steady_clock::now();
  IrlResult out;
  out.log.algorithm = "maxent";
  VectorD theta = cfg.theta0.size() > 0 ? cfg.theta0 : VectorD(VectorD::Zero(fm.dim()));
  if (theta.size() != fm.dim()) throw ShapeError("run_maxent_irl: theta0 has the wrong dimension");
  TableD q = TableD::Zero(mdp.n_states, mdp.n_actions);
  out.policy = uniform_policy<double>(mdp.n_states, mdp.n_actions);
  long backups = 0;

  for (int t = 0; t < cfg.outer_iters; ++t) {
    if (!cfg.warm_start) q.setZero();
    const auto sol = solve_soft_q(mdp, reward_table(fm, theta), cfg.inner_tol, q);
    q = sol.q;
    backups += sol.backups;
    const VectorD g = target - model_feature_expectation(mdp, fm, sol.policy);

    IterateRecord rec;
    rec.k = t;
    rec.surrogate = target.dot(theta) - mdp.rho.dot(sol.v);
    rec.grad_norm_sq = g.squaredNorm();
    rec.est_grad_norm_sq = rec.grad_norm_sq;
    rec.policy_gap = std::numeric_limits<double>::quiet_NaN();
    rec.backups = backups;
    rec.theta_hash = hash_vector(theta);

    theta += cfg.step_size * g;
    if (!theta.allFinite()) {
      throw NumericError("run_maxent_irl: theta became non-finite at outer step " +
                         std::to_string(t) + "; reduce step_size");
    }
    if (cfg.record_wall_time) {
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    out.log.records.push_back(std::move(rec));
  }
  out.params.theta = theta;
  // Policy of the returned theta; this last solve is bookkeeping and is not counted.
  if (cfg.outer_iters > 0) out.policy = solve_soft_q(mdp, reward_table(fm, theta), cfg.inner_tol, q).policy;
  return out;
}

double feature_matching_residual(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                                 const VectorD& expert_features, double tol) {
  if (fm.dim() == 0) return 0.0;
  return exact_gradient_from_features(mdp, fm, theta, expert_features, tol).cwiseAbs().maxCoeff();
}

double feature_matching_residual(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                                 const Dataset& data, double tol) {
  return feature_matching_residual(mdp, fm, theta,
                                   empirical_feature_expectation(fm, data, mdp.gamma), tol);
}

}  // namespace irl
