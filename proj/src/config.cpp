#include "irl/config.hpp"

#include <fstream>

namespace irl {

namespace {

void read_ml_irl(const nlohmann::json& j, MlIrlConfig& c, TargetSource& target) {
  c.K = j.value("K", c.K);
  c.alpha0 = j.value("alpha0", c.alpha0);
  c.sigma = j.value("sigma", c.sigma);
  c.q_eval_tol = j.value("q_eval_tol", c.q_eval_tol);
  c.eval_sweeps = j.value("eval_sweeps", c.eval_sweeps);
  c.eval_noise = j.value("eval_noise", c.eval_noise);
  c.horizon = j.value("horizon", c.horizon);
  c.batch_size = j.value("batch_size", c.batch_size);
  if (j.contains("mode")) {
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "exact") {
      c.mode = GradientMode::kExact;
    } else if (mode == "stochastic") {
      c.mode = GradientMode::kStochastic;
    } else {
      throw ConfigError("ml_irl.mode must be 'exact' or 'stochastic'");
    }
  }
  if (j.contains("target")) {
    const auto t = j.at("target").get<std::string>();
    if (t == "dataset") {
      target = TargetSource::kDataset;
    } else if (t == "expert_policy") {
      target = TargetSource::kExpertPolicy;
    } else {
      throw ConfigError("ml_irl.target must be 'dataset' or 'expert_policy'");
    }
  }
  if (j.contains("anchor_action") && !j.at("anchor_action").is_null()) {
    c.anchor_action = j.at("anchor_action").get<int>();
  }
  c.diagnostics = j.value("diagnostics", c.diagnostics);
  c.validate();
}

void read_maxent(const nlohmann::json& j, MaxEntConfig& c) {
  c.outer_iters = j.value("outer_iters", c.outer_iters);
  c.inner_tol = j.value("inner_tol", c.inner_tol);
  c.step_size = j.value("step_size", c.step_size);
  c.warm_start = j.value("warm_start", c.warm_start);
  c.validate();
}

void read_verify(const nlohmann::json& j, VerifyConfig& c) {
  c.contraction_steps = j.value("contraction_steps", c.contraction_steps);
  c.eps_app = j.value("eps_app", c.eps_app);
  c.lipschitz_pairs = j.value("lipschitz_pairs", c.lipschitz_pairs);
  c.gumbel_samples = j.value("gumbel_samples", c.gumbel_samples);
  c.duality_K = j.value("duality_K", c.duality_K);
  c.rate_K = j.value("rate_K", c.rate_K);
  c.coverage_resamples = j.value("coverage_resamples", c.coverage_resamples);
  c.coverage_n_traj = j.value("coverage_n_traj", c.coverage_n_traj);
  c.delta = j.value("delta", c.delta);
  c.concavity_probes = j.value("concavity_probes", c.concavity_probes);
  c.fd_h = j.value("fd_h", c.fd_h);
  if (c.gumbel_samples < 10000) throw ConfigError("verify.gumbel_samples must be >= 10000");
  if (c.rate_K < 50) throw ConfigError("verify.rate_K must be >= 50");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("verify.delta must lie in (0, 1)");
}

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig cfg;
  try {
    if (j.contains("scenario")) cfg.scenario = scenario_spec_from_json(j);
    if (j.contains("expert")) {
      cfg.expert.n_traj = j.at("expert").value("n_traj", cfg.expert.n_traj);
      cfg.expert.horizon = j.at("expert").value("horizon", cfg.expert.horizon);
      if (cfg.expert.n_traj < 1) throw ConfigError("expert.n_traj must be >= 1");
    }
    if (j.contains("ml_irl")) read_ml_irl(j.at("ml_irl"), cfg.ml_irl, cfg.target);
    if (j.contains("maxent")) read_maxent(j.at("maxent"), cfg.maxent);
    if (j.contains("verify")) read_verify(j.at("verify"), cfg.verify);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j = scenario_spec_to_json(cfg.scenario);
  j["expert"] = {{"n_traj", cfg.expert.n_traj}, {"horizon", cfg.expert.horizon}};
  const auto& m = cfg.ml_irl;
  j["ml_irl"] = {{"K", m.K},
                 {"alpha0", m.alpha0},
                 {"sigma", m.sigma},
                 {"q_eval_tol", m.q_eval_tol},
                 {"eval_sweeps", m.eval_sweeps},
                 {"eval_noise", m.eval_noise},
                 {"horizon", m.horizon},
                 {"batch_size", m.batch_size},
                 {"mode", m.mode == GradientMode::kExact ? "exact" : "stochastic"},
                 {"target", cfg.target == TargetSource::kDataset ? "dataset" : "expert_policy"},
                 {"anchor_action", m.anchor_action ? nlohmann::json(*m.anchor_action) : nlohmann::json(nullptr)},
                 {"diagnostics", m.diagnostics}};
  const auto& x = cfg.maxent;
  j["maxent"] = {{"outer_iters", x.outer_iters},
                 {"inner_tol", x.inner_tol},
                 {"step_size", x.step_size},
                 {"warm_start", x.warm_start}};
  const auto& v = cfg.verify;
  j["verify"] = {{"contraction_steps", v.contraction_steps},
                 {"eps_app", v.eps_app},
                 {"lipschitz_pairs", v.lipschitz_pairs},
                 {"gumbel_samples", v.gumbel_samples},
                 {"duality_K", v.duality_K},
                 {"rate_K", v.rate_K},
                 {"coverage_resamples", v.coverage_resamples},
                 {"coverage_n_traj", v.coverage_n_traj},
                 {"delta", v.delta},
                 {"concavity_probes", v.concavity_probes},
                 {"fd_h", v.fd_h}};
  return j;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return experiment_config_from_json(j);
}

}  // namespace irl
