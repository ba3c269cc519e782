#include "irl/likelihood.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace irl {

void to_json(nlohmann::json& j, const LikelihoodReport& r) {
  j = nlohmann::json{{"surrogate_L_hat", r.surrogate},
                     {"empirical_L_tilde", r.empirical},
                     {"term_T1", r.t1},
                     {"term_T2", r.t2}};
  j["exact_L"] = r.exact ? nlohmann::json(*r.exact) : nlohmann::json(nullptr);
}

VectorD occupancy_feature_expectation(const FeatureMap& fm, const TableD& d, double gamma) {
  const VectorD flat = d.reshaped<Eigen::RowMajor>();
  return fm.phi().transpose() * flat / (1.0 - gamma);
}

VectorD model_feature_expectation(const Mdp& mdp, const FeatureMap& fm, const PolicyD& policy) {
  return occupancy_feature_expectation(fm, occupancy(mdp, policy).d, mdp.gamma);
}

double exact_likelihood_via_log_policy(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                                       const PolicyD& expert, double tol) {
  const auto sol = solve_soft_q(mdp, reward_table(fm, theta), tol);
  const auto occ = occupancy(mdp, expert);
  // log pi_theta = q - v, without exponentiating.
  const TableD log_pi = sol.q.colwise() - sol.v;
  return (occ.d.array() * log_pi.array()).sum() / (1.0 - mdp.gamma);
}

double exact_likelihood(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                        const PolicyD& expert, double tol) {
  if (!(expert.pi.minCoeff() > 0.0)) {
    throw std::invalid_argument("exact_likelihood: expert policy must be strictly positive");
  }
  const auto reward = reward_table(fm, theta);
  const auto sol = solve_soft_q(mdp, reward, tol);
  const auto occ = occupancy(mdp, expert);
  const double value =
      (occ.d.array() * reward.values.array()).sum() / (1.0 - mdp.gamma) - mdp.rho.dot(sol.v);

  const TableD log_pi = sol.q.colwise() - sol.v;
  const double via_log = (occ.d.array() * log_pi.array()).sum() / (1.0 - mdp.gamma);
  if (std::abs(value - via_log) > 1e-7 * std::max(1.0, std::abs(value))) {
    throw NumericError("exact_likelihood: value-difference and log-policy forms disagree");
  }
  return value;
}

double surrogate_likelihood(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                            const VectorD& expert_features, double tol) {
  const auto sol = solve_soft_q(mdp, reward_table(fm, theta), tol);
  return expert_features.dot(theta) - mdp.rho.dot(sol.v);
}

double surrogate_likelihood(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                            const Dataset& data, double tol) {
  return surrogate_likelihood(mdp, fm, theta, empirical_feature_expectation(fm, data, mdp.gamma),
                              tol);
}

LikelihoodReport empirical_decomposition(const Mdp& mdp, const FeatureMap& fm,
                                         const VectorD& theta, const Dataset& data,
                                         const PolicyD* expert, double tol) {
  validate_dataset(data, mdp.n_states, mdp.n_actions);
  const auto reward = reward_table(fm, theta);
  const auto sol = solve_soft_q(mdp, reward, tol);
  const TableD log_pi = sol.q.colwise() - sol.v;
  const TableD next_v = detail::expected_next(mdp, sol.v);

  LikelihoodReport rep;
  double empirical = 0.0, t1 = 0.0, t2 = 0.0;
  for (const auto& tr : data.trajectories) {
    if (!tr.next_state) {
      throw std::invalid_argument("empirical_decomposition: trajectory lacks its successor state");
    }
    double w = 1.0;  // gamma^t
    double reward_sum = 0.0;
    for (std::size_t t = 0; t < tr.steps.size(); ++t) {
      const auto [s, a] = tr.steps[t];
      const int succ = t + 1 < tr.steps.size() ? tr.steps[t + 1].first : *tr.next_state;
      empirical += w * log_pi(s, a);
      reward_sum += w * reward.values(s, a);
      t2 += w * mdp.gamma * (next_v(s, a) - sol.v(succ));
      w *= mdp.gamma;
    }
    // w = gamma^H here; the bootstrap term gamma^H V(s_H) is what a truncated
    // trajectory leaves of the infinite telescoping sum.
    t1 += reward_sum - sol.v(tr.steps.front().first) + w * sol.v(*tr.next_state);
  }
  const double n = static_cast<double>(data.size());
  rep.empirical = empirical / n;
  rep.t1 = t1 / n;
  rep.t2 = t2 / n;
  rep.surrogate =
      empirical_feature_expectation(fm, data, mdp.gamma).dot(theta) - mdp.rho.dot(sol.v);
  if (expert) rep.exact = exact_likelihood(mdp, fm, theta, *expert, tol);
  return rep;
}

VectorD exact_gradient_from_features(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                                     const VectorD& expert_features, double tol) {
  const auto sol = solve_soft_q(mdp, reward_table(fm, theta), tol);
  return expert_features - model_feature_expectation(mdp, fm, sol.policy);
}

VectorD exact_gradient(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                       const OccupancyD& expert_occ, double tol) {
  return exact_gradient_from_features(
      mdp, fm, theta, occupancy_feature_expectation(fm, expert_occ.d, mdp.gamma), tol);
}

VectorD exact_gradient(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                       const Dataset& data, double tol) {
  return exact_gradient_from_features(mdp, fm, theta,
                                      empirical_feature_expectation(fm, data, mdp.gamma), tol);
}

double concentration_bound(double c_r, double gamma, double delta, long n) {
  if (!(c_r > 0.0)) throw std::domain_error("concentration_bound: C_r must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::domain_error("concentration_bound: need 0 <= gamma < 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("concentration_bound: need 0 < delta < 1");
  if (n < 1) throw std::domain_error("concentration_bound: need n >= 1");
  return c_r / (1.0 - gamma) * std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

}  // namespace irl
