#pragma once

#include <cstdint>

#include "irl/ml_irl.hpp"

namespace irl {

struct MaxEntConfig {
  int outer_iters = 200;
  double inner_tol = 1e-8;
  double step_size = 0.05;
  std::uint64_t seed = 0;  // unused by the deterministic algorithm; kept for the manifest
  bool warm_start = false;  // start each inner solve from the previous Q instead of zero
  VectorD theta0;
  bool record_wall_time = false;

  void validate() const;
};

/// Nested-loop baseline: every outer step solves the soft MDP to inner_tol
/// (backups counted), takes Phi_theta from the exact occupancy and ascends
/// theta by step_size * (Phi_E - Phi_theta). Logs use the ml_irl format with
/// policy_gap = NaN. `expert` replaces the dataset features as in run_ml_irl.
IrlResult run_maxent_irl(const Mdp& mdp, const FeatureMap& fm, const Dataset& data,
                         const MaxEntConfig& cfg, const PolicyD* expert = nullptr);

/// ||Phi_E - Phi_theta||_inf.
double feature_matching_residual(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                                 const Dataset& data, double tol = 1e-11);
double feature_matching_residual(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                                 const VectorD& expert_features, double tol = 1e-11);

}  // namespace irl
