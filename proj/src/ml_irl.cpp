#include "irl/ml_irl.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "irl/likelihood.hpp"

namespace irl {

void MlIrlConfig::validate() const {
  if (K < 1) throw ConfigError("ml_irl: K must be >= 1");
  if (!(alpha0 > 0.0)) throw ConfigError("ml_irl: alpha0 must be positive");
  if (!(sigma > 0.0 && sigma < 1.0)) throw ConfigError("ml_irl: sigma must lie in (0, 1)");
  if (!(q_eval_tol >= 0.0)) throw ConfigError("ml_irl: q_eval_tol must be >= 0");
  if (q_eval_tol == 0.0 && eval_sweeps <= 0) {
    throw ConfigError("ml_irl: q_eval_tol = 0 needs a positive eval_sweeps budget");
  }
  if (eval_sweeps < 0) throw ConfigError("ml_irl: eval_sweeps must be >= 0");
  if (!(eval_noise >= 0.0)) throw ConfigError("ml_irl: eval_noise must be >= 0");
  if (horizon < 0) throw ConfigError("ml_irl: horizon must be >= 0");
  if (batch_size < 1) throw ConfigError("ml_irl: batch_size must be >= 1");
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string hash_vector(const VectorD& v) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(v.data());
  for (std::size_t i = 0; i < static_cast<std::size_t>(v.size()) * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_iterate_csv(std::ostream& os, const IterateLog& log) {
  os << "k,L_hat,grad_norm_sq,policy_gap,backups,wall_ms,est_grad_norm_sq,theta_hash\n";
  for (const auto& r : log.records) {
    os << r.k << ',' << format_double(r.surrogate) << ',' << format_double(r.grad_norm_sq) << ','
       << format_double(r.policy_gap) << ',' << r.backups << ','
       << (r.wall_ms ? format_double(*r.wall_ms) : std::string()) << ','
       << format_double(r.est_grad_norm_sq) << ',' << r.theta_hash << '\n';
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double x = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("trailing characters in '" + s + "'");
  return x;
}

}  // namespace

IterateLog read_iterate_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("iterate CSV is empty");
  const auto header = split_csv_line(line);
  auto col = [&](const std::string& name) -> long {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<long>(i);
    }
    return -1;
  };
  const long ck = col("k"), cl = col("L_hat"), cg = col("grad_norm_sq"), cp = col("policy_gap"),
             cb = col("backups"), cw = col("wall_ms"), ce = col("est_grad_norm_sq"),
             ch = col("theta_hash");
  if (ck < 0 || cl < 0 || cg < 0 || cb < 0) {
    throw IoError("iterate CSV header lacks one of k, L_hat, grad_norm_sq, backups");
  }
  IterateLog log;
  long line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw IoError("iterate CSV line " + std::to_string(line_no) + ": expected " +
                    std::to_string(header.size()) + " fields");
    }
    try {
      IterateRecord r;
      r.k = std::stoi(f[ck]);
      r.surrogate = parse_double(f[cl]);
      r.grad_norm_sq = parse_double(f[cg]);
      r.policy_gap = cp >= 0 ? parse_double(f[cp]) : std::numeric_limits<double>::quiet_NaN();
      r.backups = std::stol(f[cb]);
      if (cw >= 0 && !f[cw].empty()) r.wall_ms = parse_double(f[cw]);
      r.est_grad_norm_sq = ce >= 0 ? parse_double(f[ce]) : std::numeric_limits<double>::quiet_NaN();
      if (ch >= 0) r.theta_hash = f[ch];
      log.records.push_back(std::move(r));
    } catch (const std::logic_error& e) {
      throw IoError("iterate CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return log;
}

double policy_gap(const PolicyD& pi, const PolicyD& pi_opt) {
  if (pi.pi.rows() != pi_opt.pi.rows() || pi.pi.cols() != pi_opt.pi.cols()) {
    throw ShapeError("policy_gap: policies differ in shape");
  }
  if (!(pi.pi.minCoeff() > 0.0) || !(pi_opt.pi.minCoeff() > 0.0)) {
    throw std::invalid_argument("policy_gap: zero-probability entry");
  }
  return (pi.pi.array().log() - pi_opt.pi.array().log()).abs().maxCoeff();
}

double value_gap_objective(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                           const PolicyD& expert, double tol) {
  if (!fm.state_only()) throw std::invalid_argument("value_gap_objective: feature map is not state-only");
  const auto reward = reward_table(fm, theta);
  const auto sol = solve_soft_q(mdp, reward, tol);
  SolverOptions<double> opts;
  opts.tol = tol;
  opts.mode = EvalMode::kDirect;
  const auto expert_value = soft_policy_evaluation(mdp, reward, expert, opts);
  return mdp.rho.dot(sol.v) - mdp.rho.dot(expert_value.v);
}

double mean_kl_under_expert(const Mdp& mdp, const PolicyD& expert, const PolicyD& pi) {
  const auto occ = occupancy(mdp, expert);
  double kl = 0.0;
  for (Eigen::Index s = 0; s < mdp.n_states; ++s) {
    double row = 0.0;
    for (Eigen::Index a = 0; a < mdp.n_actions; ++a) {
      const double p = expert.pi(s, a);
      if (p > 0.0) row += p * (std::log(p) - std::log(pi.pi(s, a)));
    }
    kl += occ.state(s) * row;
  }
  return kl;
}

IrlResult run_ml_irl(const Mdp& mdp, const FeatureMap& fm, const Dataset& data,
                     const MlIrlConfig& cfg, const PolicyD* expert) {
  cfg.validate();
  if (fm.n_states() != mdp.n_states || fm.n_actions() != mdp.n_actions) {
    throw ShapeError("run_ml_irl: feature map does not match the MDP");
  }
  const bool stochastic = cfg.mode == GradientMode::kStochastic;
  if (stochastic || !expert) {
    if (data.size() == 0) throw ConfigError("run_ml_irl: expert dataset is empty");
    validate_dataset(data, mdp.n_states, mdp.n_actions);
  }
  const VectorD target = !stochastic && expert
                             ? occupancy_feature_expectation(fm, occupancy(mdp, *expert).d, mdp.gamma)
                             : empirical_feature_expectation(fm, data, mdp.gamma);

  const auto start = std::chrono::steady_clock::now();
  const double alpha = cfg.alpha0 / std::pow(static_cast<double>(cfg.K), cfg.sigma);
  const int horizon = cfg.horizon > 0 ? cfg.horizon : default_horizon(mdp.gamma);

  IrlResult out;
  out.log.algorithm = stochastic ? "ml-irl-stochastic" : "ml-irl-exact";
  VectorD theta = cfg.theta0.size() > 0 ? cfg.theta0 : VectorD(VectorD::Zero(fm.dim()));
  if (theta.size() != fm.dim()) throw ShapeError("run_ml_irl: theta0 has the wrong dimension");
  PolicyD pi = uniform_policy<double>(mdp.n_states, mdp.n_actions);
  TableD q_hat = TableD::Zero(mdp.n_states, mdp.n_actions);
  TableD q_diag = q_hat;
  Rng noise_rng(derive_seed(cfg.seed, 3, 0));
  long backups = 0;

  SolverOptions<double> eval_opts;
  eval_opts.tol = cfg.q_eval_tol;
  eval_opts.mode = EvalMode::kIterative;

  out.log.records.reserve(static_cast<std::size_t>(cfg.K));
  for (int k = 0; k < cfg.K; ++k) {
    const auto reward = reward_table(fm, theta);

    // Policy evaluation, warm-started from the previous estimate.
    if (cfg.eval_sweeps > 0) {
      soft_policy_sweeps(mdp, reward, pi, q_hat, cfg.eval_sweeps);
      backups += cfg.eval_sweeps;
    } else {
      auto pv = soft_policy_evaluation(mdp, reward, pi, eval_opts, &q_hat);
      q_hat = std::move(pv.q);
      backups += pv.sweeps;
    }

    // Policy improvement.
    TableD q_improve = q_hat;
    if (cfg.eval_noise > 0.0) {
      for (Eigen::Index i = 0; i < q_improve.size(); ++i) {
        q_improve.data()[i] += cfg.eval_noise * (2.0 * noise_rng.uniform() - 1.0);
      }
    }
    PolicyD pi_next = softmax_policy(q_improve);
    if (!(pi_next.pi.minCoeff() > 0.0)) {
      throw NumericError("run_ml_irl: policy underflowed to zero at k=" + std::to_string(k) +
                         " (rewards too large?)");
    }

    IterateRecord rec;
    rec.k = k;
    rec.backups = backups;
    rec.theta_hash = hash_vector(theta);
    rec.policy_gap = std::numeric_limits<double>::quiet_NaN();
    rec.surrogate = std::numeric_limits<double>::quiet_NaN();
    rec.grad_norm_sq = std::numeric_limits<double>::quiet_NaN();
    if (cfg.diagnostics) {
      const auto sol = solve_soft_q(mdp, reward, 1e-11, q_diag);
      q_diag = sol.q;
      rec.surrogate = target.dot(theta) - mdp.rho.dot(sol.v);
      rec.grad_norm_sq = (target - model_feature_expectation(mdp, fm, sol.policy)).squaredNorm();
      rec.policy_gap =
          (log_softmax_rows(q_improve) - log_softmax_rows(sol.q)).cwiseAbs().maxCoeff();
    }

    // Gradient estimate.
    VectorD g;
    if (stochastic) {
      g = VectorD::Zero(fm.dim());
      Rng pick(derive_seed(cfg.seed, 1, static_cast<std::uint64_t>(k)));
      for (int b = 0; b < cfg.batch_size; ++b) {
        const auto& tau_e = data.trajectories[pick.below(data.size())];
        const auto tau_a = sample_trajectory(
            mdp, pi_next, horizon,
            derive_seed(cfg.seed, 2, static_cast<std::uint64_t>(k) * cfg.batch_size + b));
        g += discounted_grad_sum(fm, tau_e, mdp.gamma) - discounted_grad_sum(fm, tau_a, mdp.gamma);
      }
      g /= cfg.batch_size;
    } else {
      g = target - model_feature_expectation(mdp, fm, pi_next);
    }
    rec.est_grad_norm_sq = g.squaredNorm();

    theta += alpha * g;
    if (!theta.allFinite()) {
      throw NumericError("run_ml_irl: theta became non-finite at k=" + std::to_string(k) +
                         " (alpha=" + format_double(alpha) + "); reduce alpha0");
    }
    pi = std::move(pi_next);
    if (cfg.record_wall_time) {
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    out.log.records.push_back(std::move(rec));
  }

  out.params.theta = theta;
  out.policy = pi;
  if (cfg.anchor_action) {
    if (*cfg.anchor_action < 0 || *cfg.anchor_action >= mdp.n_actions) {
      throw ConfigError("ml_irl: anchor action out of range");
    }
    out.anchored_rewards = anchor_rewards(reward_table(fm, theta).values, *cfg.anchor_action);
  }
  return out;
}

void write_result_json(std::ostream& os, const IrlResult& result, const nlohmann::json& extra) {
  nlohmann::json j = extra.is_object() ? extra : nlohmann::json::object();
  j["algorithm"] = result.log.algorithm;
  j["theta"] = std::vector<double>(result.params.theta.begin(), result.params.theta.end());
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index s = 0; s < result.policy.pi.rows(); ++s) {
    rows.push_back(std::vector<double>(result.policy.pi.row(s).begin(), result.policy.pi.row(s).end()));
  }
  j["policy"] = rows;
  if (result.anchored_rewards) {
    nlohmann::json ar = nlohmann::json::array();
    for (Eigen::Index s = 0; s < result.anchored_rewards->rows(); ++s) {
      ar.push_back(std::vector<double>(result.anchored_rewards->row(s).begin(),
                                       result.anchored_rewards->row(s).end()));
    }
    j["anchored_rewards"] = ar;
  }
  if (!result.log.records.empty()) {
    const auto& last = result.log.records.back();
    j["iterations"] = result.log.records.size();
    j["final_L_hat"] = last.surrogate;
    j["total_backups"] = last.backups;
  }
  os << j.dump(2) << '\n';
}

}  // namespace irl
