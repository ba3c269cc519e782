#pragma once

// Tabular entropy-regularized MDPs: data types and the soft dynamic-programming
// primitives everything else is built on.
//
// Layout conventions
//   * state-action tables are row-major [state][action] matrices, so the flat
//     index of (s, a) is s * n_actions + a;
//   * the transition tensor is stored as a dense (n_states * n_actions) x n_states
//     matrix whose row s * n_actions + a is P(. | s, a).

#include <Eigen/Core>
#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "irl/errors.hpp"

namespace irl {

template <typename Scalar>
using Table = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct TabularMdp {
  Eigen::Index n_states = 0;
  Eigen::Index n_actions = 0;
  Matrix<Scalar> transition;  // row s * n_actions + a holds P(. | s, a)
  Scalar gamma = Scalar(0);
  Vector<Scalar> rho;

  Eigen::Index n_pairs() const { return n_states * n_actions; }
  Eigen::Index pair(Eigen::Index s, Eigen::Index a) const { return s * n_actions + a; }

  auto next_state_dist(Eigen::Index s, Eigen::Index a) const {
    return transition.row(pair(s, a));
  }
};

/// Reward per step indexed [state][action]. `within_bound` records whether
/// 0 <= r <= bound holds; nothing is clamped.
template <typename Scalar>
struct RewardTable {
  Table<Scalar> values;
  Scalar bound = Scalar(1);
  bool within_bound = false;

  RewardTable() = default;
  explicit RewardTable(Table<Scalar> v, Scalar c_r = Scalar(1))
      : values(std::move(v)), bound(c_r) {
    within_bound = values.size() > 0 && values.minCoeff() >= Scalar(0) &&
                   values.maxCoeff() <= bound;
  }
};

template <typename Scalar>
struct Policy {
  Table<Scalar> pi;  // [state][action], rows sum to one

  Eigen::Index n_states() const { return pi.rows(); }
  Eigen::Index n_actions() const { return pi.cols(); }
};

/// Normalized discounted state-action visitation d(s,a) = (1-gamma) pi(a|s) sum_t gamma^t P(s_t = s).
template <typename Scalar>
struct Occupancy {
  Table<Scalar> d;
  Vector<Scalar> state;  // row sums of d
};

template <typename Scalar>
struct SoftSolution {
  Table<Scalar> q;
  Vector<Scalar> v;
  Policy<Scalar> policy;
  Scalar residual = Scalar(0);  // sup-norm of the last successive-iterate difference
  long backups = 0;
};

template <typename Scalar>
struct PolicyValue {
  Table<Scalar> q;
  Vector<Scalar> v;
  long sweeps = 0;  // policy Bellman sweeps; zero for the direct solve
};

enum class EvalMode { kAuto, kIterative, kDirect };

template <typename Scalar>
struct SolverOptions {
  Scalar tol = Scalar(1e-10);
  long max_iterations = 200000;
  EvalMode mode = EvalMode::kAuto;
};

// Direct solves are used up to this many state-action pairs (resp. states for
// occupancy); above it the fixed point is iterated.
inline constexpr Eigen::Index kDirectSolveLimit = 2000;

namespace detail {

inline std::string pair_str(Eigen::Index s, Eigen::Index a) {
  std::ostringstream os;
  os << "(" << s << "," << a << ")";
  return os.str();
}

template <typename Scalar>
Scalar stopping_threshold(Scalar tol, Scalar gamma) {
  if (gamma <= Scalar(0)) return std::numeric_limits<Scalar>::infinity();
  return tol * (Scalar(1) - gamma) / gamma;
}

template <typename Scalar>
void check_table_shape(const TabularMdp<Scalar>& mdp, const Table<Scalar>& t, const char* what) {
  if (t.rows() != mdp.n_states || t.cols() != mdp.n_actions) {
    std::ostringstream os;
    os << what << " has shape " << t.rows() << "x" << t.cols() << ", expected " << mdp.n_states
       << "x" << mdp.n_actions;
    throw ShapeError(os.str());
  }
}

// sum_{s'} P(s'|s,a) v(s') as an [state][action] table.
template <typename Scalar>
Table<Scalar> expected_next(const TabularMdp<Scalar>& mdp, const Vector<Scalar>& v) {
  Vector<Scalar> flat = mdp.transition * v;
  return flat.template reshaped<Eigen::RowMajor>(mdp.n_states, mdp.n_actions);
}

// State-to-state kernel under a policy: P_pi(s, s') = sum_a pi(a|s) P(s'|s,a).
template <typename Scalar>
Matrix<Scalar> policy_kernel(const TabularMdp<Scalar>& mdp, const Table<Scalar>& pi) {
  Matrix<Scalar> k(mdp.n_states, mdp.n_states);
  for (Eigen::Index s = 0; s < mdp.n_states; ++s) {
    k.row(s) = pi.row(s) * mdp.transition.middleRows(s * mdp.n_actions, mdp.n_actions);
  }
  return k;
}

}  // namespace detail

template <typename Scalar>
void validate_mdp(const TabularMdp<Scalar>& mdp, Scalar sum_tol = Scalar(1e-12)) {
  if (mdp.n_states <= 0) throw MdpError("n_states must be positive");
  if (mdp.n_actions <= 0) throw MdpError("n_actions must be positive");
  if (mdp.transition.rows() != mdp.n_pairs() || mdp.transition.cols() != mdp.n_states) {
    throw MdpError("transition tensor has wrong shape");
  }
  if (!(mdp.gamma >= Scalar(0))) throw MdpError("discount must be >= 0");
  if (!(mdp.gamma < Scalar(1))) throw MdpError("discount must be < 1");
  for (Eigen::Index s = 0; s < mdp.n_states; ++s) {
    for (Eigen::Index a = 0; a < mdp.n_actions; ++a) {
      const auto row = mdp.next_state_dist(s, a);
      if (!row.allFinite() || row.minCoeff() < Scalar(0)) {
        throw MdpError("negative or non-finite transition entry at " + detail::pair_str(s, a));
      }
      if (std::abs(row.sum() - Scalar(1)) > sum_tol) {
        throw MdpError("row-sum violation at " + detail::pair_str(s, a));
      }
    }
  }
  if (mdp.rho.size() != mdp.n_states) throw MdpError("initial distribution has wrong size");
  if (!mdp.rho.allFinite() || mdp.rho.minCoeff() < Scalar(0)) {
    throw MdpError("initial distribution has a negative entry");
  }
  if (std::abs(mdp.rho.sum() - Scalar(1)) > sum_tol) {
    throw MdpError("initial distribution does not sum to 1");
  }
}

/// Row-wise log-sum-exp with max subtraction.
template <typename Derived>
Vector<typename Derived::Scalar> logsumexp_rows(const Eigen::MatrixBase<Derived>& q) {
  using Scalar = typename Derived::Scalar;
  Vector<Scalar> out(q.rows());
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    const Scalar m = q.row(s).maxCoeff();
    out(s) = m + std::log((q.row(s).array() - m).exp().sum());
  }
  return out;
}

template <typename Derived>
Policy<typename Derived::Scalar> softmax_policy(const Eigen::MatrixBase<Derived>& q) {
  using Scalar = typename Derived::Scalar;
  Policy<Scalar> p;
  p.pi.resize(q.rows(), q.cols());
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    const Scalar m = q.row(s).maxCoeff();
    auto e = (q.row(s).array() - m).exp();
    p.pi.row(s) = e / e.sum();
  }
  return p;
}

template <typename Scalar>
Policy<Scalar> uniform_policy(Eigen::Index n_states, Eigen::Index n_actions) {
  Policy<Scalar> p;
  p.pi = Table<Scalar>::Constant(n_states, n_actions, Scalar(1) / Scalar(n_actions));
  return p;
}

/// Soft Bellman operator: r(s,a) + gamma * sum_{s'} P(s'|s,a) logsumexp_{a'} q(s',a').
template <typename Scalar>
Table<Scalar> soft_bellman_backup(const TabularMdp<Scalar>& mdp, const RewardTable<Scalar>& reward,
                                  const Table<Scalar>& q) {
  detail::check_table_shape(mdp, reward.values, "reward");
  detail::check_table_shape(mdp, q, "q");
  return reward.values + mdp.gamma * detail::expected_next(mdp, logsumexp_rows(q));
}

/// Soft value iteration started from `q_init`. Stops once successive iterates
/// differ by at most tol * (1 - gamma) / gamma, which bounds the distance to
/// the fixed point by tol.
template <typename Scalar>
SoftSolution<Scalar> solve_soft_q(const TabularMdp<Scalar>& mdp, const RewardTable<Scalar>& reward,
                                  Scalar tol, const Table<Scalar>& q_init,
                                  long max_iterations = SolverOptions<Scalar>{}.max_iterations) {
  if (!(tol > Scalar(0))) throw std::invalid_argument("solve_soft_q: tol must be positive");
  detail::check_table_shape(mdp, reward.values, "reward");
  detail::check_table_shape(mdp, q_init, "q_init");
  const Scalar stop = detail::stopping_threshold(tol, mdp.gamma);

  SoftSolution<Scalar> sol;
  sol.q = q_init;
  for (long it = 0; it < max_iterations; ++it) {
    Table<Scalar> next = soft_bellman_backup(mdp, reward, sol.q);
    ++sol.backups;
    sol.residual = (next - sol.q).cwiseAbs().maxCoeff();
    sol.q = std::move(next);
    if (!(sol.residual <= stop)) {
      if (!std::isfinite(static_cast<double>(sol.residual))) {
        throw NumericError("solve_soft_q: non-finite iterate");
      }
      continue;
    }
    sol.v = logsumexp_rows(sol.q);
    sol.policy = softmax_policy(sol.q);
    return sol;
  }
  throw ConvergenceError("solve_soft_q: no convergence within " + std::to_string(max_iterations) +
                         " backups (discount too close to 1 for the cap?)");
}

template <typename Scalar>
SoftSolution<Scalar> solve_soft_q(const TabularMdp<Scalar>& mdp, const RewardTable<Scalar>& reward,
                                  Scalar tol = Scalar(1e-10)) {
  return solve_soft_q(mdp, reward, tol, Table<Scalar>(Table<Scalar>::Zero(mdp.n_states, mdp.n_actions)));
}

/// Soft Q of a fixed policy:
///   Q(s,a) = r(s,a) + gamma E[V(s')],  V(s) = sum_a pi(a|s) (Q(s,a) - log pi(a|s)).
/// The iterative mode warm-starts from `q_init` when given.
template <typename Scalar>
PolicyValue<Scalar> soft_policy_evaluation(const TabularMdp<Scalar>& mdp,
                                           const RewardTable<Scalar>& reward,
                                           const Policy<Scalar>& policy,
                                           const SolverOptions<Scalar>& opts,
                                           const Table<Scalar>* q_init = nullptr) {
  detail::check_table_shape(mdp, reward.values, "reward");
  detail::check_table_shape(mdp, policy.pi, "policy");
  if (!(policy.pi.minCoeff() > Scalar(0))) {
    throw std::invalid_argument("soft_policy_evaluation: policy must be strictly positive");
  }
  const Table<Scalar> log_pi = policy.pi.array().log().matrix();
  // Per-state expected reward plus entropy under pi.
  const Vector<Scalar> entropy = -(policy.pi.array() * log_pi.array()).rowwise().sum().matrix();

  const bool direct = opts.mode == EvalMode::kDirect ||
                      (opts.mode == EvalMode::kAuto && mdp.n_pairs() <= kDirectSolveLimit);
  PolicyValue<Scalar> out;
  if (direct) {
    const Matrix<Scalar> kernel = detail::policy_kernel(mdp, policy.pi);
    const Vector<Scalar> r_pi = (policy.pi.array() * reward.values.array()).rowwise().sum().matrix();
    Matrix<Scalar> system = Matrix<Scalar>::Identity(mdp.n_states, mdp.n_states) - mdp.gamma * kernel;
    out.v = system.partialPivLu().solve(r_pi + entropy);
    if (!out.v.allFinite()) throw NumericError("soft_policy_evaluation: singular system");
    out.q = reward.values + mdp.gamma * detail::expected_next(mdp, out.v);
    return out;
  }

  if (!(opts.tol > Scalar(0))) throw std::invalid_argument("soft_policy_evaluation: tol must be positive");
  const Scalar stop = detail::stopping_threshold(opts.tol, mdp.gamma);
  out.q = q_init ? *q_init : Table<Scalar>(Table<Scalar>::Zero(mdp.n_states, mdp.n_actions));
  detail::check_table_shape(mdp, out.q, "q_init");
  for (long it = 0; it < opts.max_iterations; ++it) {
    const Vector<Scalar> v = (policy.pi.array() * out.q.array()).rowwise().sum().matrix() + entropy;
    Table<Scalar> next = reward.values + mdp.gamma * detail::expected_next(mdp, v);
    ++out.sweeps;
    const Scalar diff = (next - out.q).cwiseAbs().maxCoeff();
    out.q = std::move(next);
    if (diff <= stop) {
      out.v = (policy.pi.array() * out.q.array()).rowwise().sum().matrix() + entropy;
      return out;
    }
    if (!std::isfinite(static_cast<double>(diff))) throw NumericError("soft_policy_evaluation: non-finite iterate");
  }
  throw ConvergenceError("soft_policy_evaluation: no convergence within " +
                         std::to_string(opts.max_iterations) + " sweeps");
}

template <typename Scalar>
PolicyValue<Scalar> soft_policy_evaluation(const TabularMdp<Scalar>& mdp,
                                           const RewardTable<Scalar>& reward,
                                           const Policy<Scalar>& policy, Scalar tol) {
  SolverOptions<Scalar> opts;
  opts.tol = tol;
  return soft_policy_evaluation(mdp, reward, policy, opts);
}

/// Applies exactly `n` policy Bellman sweeps to `q` in place (no stopping test).
template <typename Scalar>
void soft_policy_sweeps(const TabularMdp<Scalar>& mdp, const RewardTable<Scalar>& reward,
                        const Policy<Scalar>& policy, Table<Scalar>& q, long n) {
  detail::check_table_shape(mdp, q, "q");
  // 0 log 0 = 0, so underflowed softmax entries are harmless here.
  const Vector<Scalar> entropy =
      policy.pi.unaryExpr([](Scalar p) { return p > Scalar(0) ? -p * std::log(p) : Scalar(0); })
          .rowwise()
          .sum();
  for (long i = 0; i < n; ++i) {
    const Vector<Scalar> v = (policy.pi.array() * q.array()).rowwise().sum().matrix() + entropy;
    q = reward.values + mdp.gamma * detail::expected_next(mdp, v);
  }
}

/// log softmax per row, computed without exponentiating back.
template <typename Derived>
Table<typename Derived::Scalar> log_softmax_rows(const Eigen::MatrixBase<Derived>& q) {
  return q.colwise() - logsumexp_rows(q);
}

/// Solves d = (1-gamma) rho + gamma P_pi^T d for the state marginal, then
/// spreads it over actions with pi.
template <typename Scalar>
Occupancy<Scalar> occupancy(const TabularMdp<Scalar>& mdp, const Policy<Scalar>& policy,
                            const SolverOptions<Scalar>& opts = {}) {
  detail::check_table_shape(mdp, policy.pi, "policy");
  const Matrix<Scalar> kernel_t = detail::policy_kernel(mdp, policy.pi).transpose();
  const Vector<Scalar> source = (Scalar(1) - mdp.gamma) * mdp.rho;

  Occupancy<Scalar> occ;
  const bool direct = opts.mode == EvalMode::kDirect ||
                      (opts.mode == EvalMode::kAuto && mdp.n_states <= kDirectSolveLimit);
  if (direct) {
    Matrix<Scalar> system =
        Matrix<Scalar>::Identity(mdp.n_states, mdp.n_states) - mdp.gamma * kernel_t;
    occ.state = system.partialPivLu().solve(source);
  } else {
    const Scalar stop = detail::stopping_threshold(opts.tol, mdp.gamma);
    occ.state = source;
    long it = 0;
    for (; it < opts.max_iterations; ++it) {
      Vector<Scalar> next = source + mdp.gamma * kernel_t * occ.state;
      const Scalar diff = (next - occ.state).cwiseAbs().maxCoeff();
      occ.state = std::move(next);
      if (diff <= stop) break;
    }
    if (it == opts.max_iterations) throw ConvergenceError("occupancy: no convergence");
  }
  occ.d = policy.pi.array().colwise() * occ.state.array();
  return occ;
}

/// E_{s0 ~ rho}[V^pi(s0)]: the discounted entropy-regularized return of pi.
template <typename Scalar>
Scalar entropy_regularized_return(const TabularMdp<Scalar>& mdp, const RewardTable<Scalar>& reward,
                                  const Policy<Scalar>& policy,
                                  const SolverOptions<Scalar>& opts = {}) {
  return mdp.rho.dot(soft_policy_evaluation(mdp, reward, policy, opts).v);
}

// Double-precision aliases used by the rest of the library.
using Mdp = TabularMdp<double>;
using Rewards = RewardTable<double>;
using PolicyD = Policy<double>;
using OccupancyD = Occupancy<double>;
using SoftSolutionD = SoftSolution<double>;
using TableD = Table<double>;
using VectorD = Vector<double>;

}  // namespace irl
