#pragma once

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include <string>

#include "irl/mdp.hpp"

namespace irl {

enum class FeatureKind { kStateAction, kStateOnly, kOneHotTabular };

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& name);

/// Linear reward family r(s,a; theta) = phi(s,a)^T theta.
///
/// `phi` has one row per state-action pair (flat index s * n_actions + a) and
/// one column per feature. A one-hot-tabular map may be either per pair
/// (p = n_states * n_actions) or per state (p = n_states, constant across actions).
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(Eigen::Index n_states, Eigen::Index n_actions, Matrix<double> phi, FeatureKind kind);

  static FeatureMap one_hot_tabular(Eigen::Index n_states, Eigen::Index n_actions);
  static FeatureMap one_hot_state(Eigen::Index n_states, Eigen::Index n_actions);

  Eigen::Index n_states() const { return n_states_; }
  Eigen::Index n_actions() const { return n_actions_; }
  Eigen::Index dim() const { return phi_.cols(); }
  FeatureKind kind() const { return kind_; }
  bool state_only() const;
  const Matrix<double>& phi() const { return phi_; }
  auto row(Eigen::Index s, Eigen::Index a) const { return phi_.row(s * n_actions_ + a); }

  /// max_{s,a} ||phi(s,a)||_2, the reward-gradient bound L_r.
  double max_norm() const;
  FeatureMap scaled(double c) const;

 private:
  void validate() const;

  Eigen::Index n_states_ = 0;
  Eigen::Index n_actions_ = 0;
  Matrix<double> phi_;
  FeatureKind kind_ = FeatureKind::kStateAction;
};

struct RewardParams {
  VectorD theta;
};

/// values[s][a] = <phi(s,a), theta>. `c_r` only feeds the bound diagnostic.
Rewards reward_table(const FeatureMap& fm, const RewardParams& params, double c_r = 1.0);
Rewards reward_table(const FeatureMap& fm, const VectorD& theta, double c_r = 1.0);

/// Gradient of r(s,a; .) with respect to theta; for a linear family this is phi(s,a).
VectorD reward_gradient(const FeatureMap& fm, Eigen::Index s, Eigen::Index a);

/// Subtracts r(s, reference_action) from every action's reward in state s.
TableD anchor_rewards(const TableD& rewards, Eigen::Index reference_action);

void to_json(nlohmann::json& j, const FeatureMap& fm);
void from_json(const nlohmann::json& j, FeatureMap& fm);

}  // namespace irl
