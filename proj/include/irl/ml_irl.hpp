#pragma once

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "irl/mdp.hpp"
#include "irl/reward.hpp"
#include "irl/rollout.hpp"

namespace irl {

enum class GradientMode { kStochastic, kExact };

struct MlIrlConfig {
  int K = 1000;
  double alpha0 = 1.0;
  double sigma = 0.5;  // alpha = alpha0 / K^sigma
  double q_eval_tol = 1e-10;
  // Sweep budget per policy evaluation; 0 iterates until q_eval_tol is met.
  long eval_sweeps = 0;
  // Uniform noise of this amplitude is added to Q-hat before policy improvement.
  double eval_noise = 0.0;
  int horizon = 0;  // 0: default_horizon(gamma)
  int batch_size = 1;
  GradientMode mode = GradientMode::kStochastic;
  std::uint64_t seed = 0;
  std::optional<int> anchor_action;
  VectorD theta0;  // empty means zeros
  // Per-iteration L_hat / exact gradient / policy gap. Not counted as backups.
  bool diagnostics = true;
  bool record_wall_time = false;

  void validate() const;
};

/// One row per iteration, evaluated at theta_k (before its update).
struct IterateRecord {
  int k = 0;
  double surrogate = 0.0;            // L_hat(theta_k)
  double grad_norm_sq = 0.0;         // ||grad L_hat(theta_k)||^2, exact
  double policy_gap = 0.0;           // ||log pi_{k+1} - log pi_{theta_k}||_inf; NaN if not tracked
  long backups = 0;                  // cumulative, after this iteration's evaluation
  std::optional<double> wall_ms;     // cumulative wall time; only with record_wall_time
  double est_grad_norm_sq = 0.0;     // ||g_k||^2 of the step actually taken
  std::string theta_hash;
};

struct IterateLog {
  std::string algorithm;
  std::vector<IterateRecord> records;

  std::size_t size() const { return records.size(); }
};

// Columns: k,L_hat,grad_norm_sq,policy_gap,backups,wall_ms,est_grad_norm_sq,theta_hash
void write_iterate_csv(std::ostream& os, const IterateLog& log);
IterateLog read_iterate_csv(std::istream& is);

struct IrlResult {
  RewardParams params;
  PolicyD policy;  // pi_K
  IterateLog log;
  std::optional<TableD> anchored_rewards;
};
using MlIrlResult = IrlResult;

/// Formats doubles with enough digits to round-trip.
std::string format_double(double x);

/// FNV-1a of the raw bytes of theta, as 16 hex digits.
std::string hash_vector(const VectorD& v);

/// Single-loop ML-IRL: one soft policy iteration step, then one reward step.
/// In exact mode the target feature expectation comes from
/// `expert` (exact occupancy) when given, otherwise from the dataset.
IrlResult run_ml_irl(const Mdp& mdp, const FeatureMap& fm, const Dataset& data,
                     const MlIrlConfig& cfg, const PolicyD* expert = nullptr);

/// max_{s,a} |log pi(a|s) - log pi_opt(a|s)|.
double policy_gap(const PolicyD& pi, const PolicyD& pi_opt);

/// E_rho[V_theta] - E_rho[V_theta^expert], for state-only feature maps.
double value_gap_objective(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                           const PolicyD& expert, double tol = 1e-11);

/// Mean KL(pi_e(.|s) || pi(.|s)) weighted by the expert state visitation.
double mean_kl_under_expert(const Mdp& mdp, const PolicyD& expert, const PolicyD& pi);

void write_result_json(std::ostream& os, const IrlResult& result, const nlohmann::json& extra);

}  // namespace irl
