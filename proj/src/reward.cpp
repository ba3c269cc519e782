#include "irl/reward.hpp"

#include <nlohmann/json.hpp>

#include <sstream>

namespace irl {

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kStateAction: return "state-action";
    case FeatureKind::kStateOnly: return "state-only";
    case FeatureKind::kOneHotTabular: return "one-hot-tabular";
  }
  return "unknown";
}

FeatureKind feature_kind_from_string(const std::string& name) {
  if (name == "state-action") return FeatureKind::kStateAction;
  if (name == "state-only") return FeatureKind::kStateOnly;
  if (name == "one-hot-tabular") return FeatureKind::kOneHotTabular;
  throw ConfigError("unknown feature kind '" + name + "'");
}

FeatureMap::FeatureMap(Eigen::Index n_states, Eigen::Index n_actions, Matrix<double> phi,
                       FeatureKind kind)
    : n_states_(n_states), n_actions_(n_actions), phi_(std::move(phi)), kind_(kind) {
  validate();
}

FeatureMap FeatureMap::one_hot_tabular(Eigen::Index n_states, Eigen::Index n_actions) {
  return FeatureMap(n_states, n_actions,
                    Matrix<double>::Identity(n_states * n_actions, n_states * n_actions),
                    FeatureKind::kOneHotTabular);
}

FeatureMap FeatureMap::one_hot_state(Eigen::Index n_states, Eigen::Index n_actions) {
  Matrix<double> phi = Matrix<double>::Zero(n_states * n_actions, n_states);
  for (Eigen::Index s = 0; s < n_states; ++s) {
    phi.middleRows(s * n_actions, n_actions).col(s).setOnes();
  }
  return FeatureMap(n_states, n_actions, std::move(phi), FeatureKind::kOneHotTabular);
}

bool FeatureMap::state_only() const {
  if (kind_ == FeatureKind::kStateOnly) return true;
  return kind_ == FeatureKind::kOneHotTabular && phi_.cols() == n_states_ && n_actions_ > 1;
}

void FeatureMap::validate() const {
  if (n_states_ <= 0 || n_actions_ <= 0) throw ShapeError("feature map: dimensions must be positive");
  if (phi_.rows() != n_states_ * n_actions_) {
    throw ShapeError("feature map: expected one row per state-action pair");
  }
  if (!phi_.allFinite()) throw ShapeError("feature map: non-finite entry");
  if (kind_ == FeatureKind::kStateOnly ||
      (kind_ == FeatureKind::kOneHotTabular && phi_.cols() == n_states_)) {
    for (Eigen::Index s = 0; s < n_states_; ++s) {
      for (Eigen::Index a = 1; a < n_actions_; ++a) {
        if (phi_.row(s * n_actions_ + a) != phi_.row(s * n_actions_)) {
          std::ostringstream os;
          os << "feature map: state-only features differ across actions at state " << s;
          throw ShapeError(os.str());
        }
      }
    }
  }
  if (kind_ == FeatureKind::kOneHotTabular) {
    if (phi_.cols() != n_states_ * n_actions_ && phi_.cols() != n_states_) {
      throw ShapeError("feature map: one-hot-tabular needs n_states*n_actions or n_states features");
    }
    for (Eigen::Index i = 0; i < phi_.rows(); ++i) {
      const auto r = phi_.row(i);
      const auto ones = (r.array() == 1.0).count();
      const auto zeros = (r.array() == 0.0).count();
      if (ones != 1 || zeros != r.size() - 1) {
        throw ShapeError("feature map: one-hot row " + std::to_string(i) + " is not a unit vector");
      }
    }
  }
}

double FeatureMap::max_norm() const {
  if (phi_.cols() == 0) return 0.0;
  return phi_.rowwise().norm().maxCoeff();
}

FeatureMap FeatureMap::scaled(double c) const {
  const FeatureKind k = kind_ == FeatureKind::kOneHotTabular
                            ? (state_only() ? FeatureKind::kStateOnly : FeatureKind::kStateAction)
                            : kind_;
  return FeatureMap(n_states_, n_actions_, c * phi_, c == 1.0 ? kind_ : k);
}

Rewards reward_table(const FeatureMap& fm, const VectorD& theta, double c_r) {
  if (theta.size() != fm.dim()) {
    std::ostringstream os;
    os << "reward_table: theta has dimension " << theta.size() << ", feature map has " << fm.dim();
    throw ShapeError(os.str());
  }
  if (!theta.allFinite()) throw NumericError("reward_table: non-finite theta");
  VectorD flat = fm.dim() == 0 ? VectorD::Zero(fm.phi().rows()) : VectorD(fm.phi() * theta);
  return Rewards(flat.reshaped<Eigen::RowMajor>(fm.n_states(), fm.n_actions()), c_r);
}

Rewards reward_table(const FeatureMap& fm, const RewardParams& params, double c_r) {
  return reward_table(fm, params.theta, c_r);
}

VectorD reward_gradient(const FeatureMap& fm, Eigen::Index s, Eigen::Index a) {
  if (s < 0 || s >= fm.n_states() || a < 0 || a >= fm.n_actions()) {
    throw std::out_of_range("reward_gradient: index out of range");
  }
  return fm.row(s, a).transpose();
}

TableD anchor_rewards(const TableD& rewards, Eigen::Index reference_action) {
  if (reference_action < 0 || reference_action >= rewards.cols()) {
    throw std::out_of_range("anchor_rewards: reference action out of range");
  }
  TableD out = rewards;
  out.colwise() -= rewards.col(reference_action);
  return out;
}

void to_json(nlohmann::json& j, const FeatureMap& fm) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(fm.phi().size()));
  for (Eigen::Index i = 0; i < fm.phi().rows(); ++i) {
    for (Eigen::Index f = 0; f < fm.phi().cols(); ++f) flat.push_back(fm.phi()(i, f));
  }
  j = nlohmann::json{{"n_states", fm.n_states()},
                     {"n_actions", fm.n_actions()},
                     {"n_features", fm.dim()},
                     {"kind", to_string(fm.kind())},
                     {"values", flat}};
}

void from_json(const nlohmann::json& j, FeatureMap& fm) {
  const auto s = j.at("n_states").get<Eigen::Index>();
  const auto a = j.at("n_actions").get<Eigen::Index>();
  const auto p = j.at("n_features").get<Eigen::Index>();
  const auto flat = j.at("values").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != s * a * p) {
    throw ShapeError("feature map JSON: values has wrong length");
  }
  Matrix<double> phi(s * a, p);
  for (Eigen::Index i = 0; i < s * a; ++i) {
    for (Eigen::Index f = 0; f < p; ++f) phi(i, f) = flat[static_cast<std::size_t>(i * p + f)];
  }
  fm = FeatureMap(s, a, std::move(phi), feature_kind_from_string(j.at("kind").get<std::string>()));
}

}  // namespace irl
