#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>

#include "irl/envs.hpp"
#include "irl/maxent_irl.hpp"
#include "irl/ml_irl.hpp"

namespace irl {

struct ExpertConfig {
  int n_traj = 30;
  int horizon = 0;  // 0: default_horizon(gamma)
};

struct VerifyConfig {
  int contraction_steps = 30;
  double eps_app = 0.1;
  int lipschitz_pairs = 100;
  long gumbel_samples = 100000;
  int duality_K = 5000;
  int rate_K = 2000;
  int coverage_resamples = 200;
  int coverage_n_traj = 50;
  double delta = 0.1;
  int concavity_probes = 100;
  double fd_h = 1e-5;
};

// Where exact-mode runs take the expert feature expectation from.
enum class TargetSource { kDataset, kExpertPolicy };

/// Everything a CLI invocation needs besides paths and the seed.
struct ExperimentConfig {
  ScenarioSpec scenario = GridWorldSpec{};
  ExpertConfig expert;
  MlIrlConfig ml_irl;
  TargetSource target = TargetSource::kDataset;
  MaxEntConfig maxent;
  VerifyConfig verify;
};

/// Missing sections keep their defaults. Throws ConfigError.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);

ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace irl
