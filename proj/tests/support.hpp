#pragma once

// Hand-rolled generators and small fixtures shared by the unit tests.

#include <cmath>
#include <cstdint>

#include "irl/envs.hpp"
#include "irl/mdp.hpp"
#include "irl/rollout.hpp"

namespace irl::test {

inline Mdp one_state(Eigen::Index n_actions, double gamma) {
  Mdp m;
  m.n_states = 1;
  m.n_actions = n_actions;
  m.transition = Matrix<double>::Ones(n_actions, 1);
  m.gamma = gamma;
  m.rho = VectorD::Ones(1);
  return m;
}

inline Rewards rewards(const TableD& values) { return Rewards(values); }

inline TableD random_table(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  TableD t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = scale * (2.0 * rng.uniform() - 1.0);
  return t;
}

inline VectorD random_vector(Rng& rng, Eigen::Index n, double scale) {
  VectorD v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * (2.0 * rng.uniform() - 1.0);
  return v;
}

// Strictly positive random policy (softmax of random logits).
inline PolicyD random_policy(Rng& rng, Eigen::Index n_states, Eigen::Index n_actions, double spread = 2.0) {
  return softmax_policy(random_table(rng, n_states, n_actions, spread));
}

inline Scenario random_instance(std::uint64_t seed, int n_states = 5, int n_actions = 3, int p = 4,
                                double gamma = 0.9) {
  return build_random_mdp(n_states, n_actions, p, gamma, 0.0, seed);
}

inline PolicyD optimal_policy(const Scenario& sc, double tol = 1e-12) {
  return solve_soft_q(sc.mdp, reward_table(sc.features, sc.theta_star), tol).policy;
}

inline double sup_norm(const TableD& a, const TableD& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace irl::test
