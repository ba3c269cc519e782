#include "irl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "irl/likelihood.hpp"

namespace irl {

namespace {

std::string describe(const Mdp& mdp, const FeatureMap& fm) {
  std::ostringstream os;
  os << "S=" << mdp.n_states << " A=" << mdp.n_actions << " p=" << fm.dim()
     << " gamma=" << format_double(mdp.gamma) << " features=" << to_string(fm.kind());
  return os.str();
}

VectorD uniform_vector(Rng& rng, Eigen::Index n, double scale) {
  VectorD v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * (2.0 * rng.uniform() - 1.0);
  return v;
}

double surrogate(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                 const VectorD& features) {
  return surrogate_likelihood(mdp, fm, theta, features, 1e-12);
}

}  // namespace

void to_json(nlohmann::json& j, const ProbeReport& r) {
  j = nlohmann::json{{"name", r.name},         {"passed", r.passed},
                     {"measured", r.measured}, {"threshold", r.threshold},
                     {"instance", r.instance}, {"seed", r.seed},
                     {"details", r.details}};
}

nlohmann::json verification_manifest(const std::vector<ProbeReport>& reports) {
  bool all = true;
  nlohmann::json probes = nlohmann::json::array();
  for (const auto& r : reports) {
    all = all && r.passed;
    probes.push_back(r);
  }
  return {{"passed", all}, {"probes", probes}};
}

VectorD fd_gradient(const std::function<double(const VectorD&)>& objective, const VectorD& theta,
                    double h) {
  if (!(h > 0.0)) throw std::invalid_argument("fd_gradient: h must be positive");
  VectorD g(theta.size());
  VectorD x = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    x(i) = theta(i) + h;
    const double up = objective(x);
    x(i) = theta(i) - h;
    const double down = objective(x);
    x(i) = theta(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

double relative_error(const VectorD& approx, const VectorD& exact) {
  const double diff = (approx - exact).norm();
  const double scale = exact.norm();
  return scale > 1e-12 ? diff / scale : diff;
}

ProbeReport gradient_fd_probe(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                              const VectorD& expert_features, double h, double threshold) {
  const VectorD exact = exact_gradient_from_features(mdp, fm, theta, expert_features, 1e-12);
  const VectorD fd = fd_gradient(
      [&](const VectorD& t) { return surrogate(mdp, fm, t, expert_features); }, theta, h);
  ProbeReport r;
  r.name = "gradient_fd";
  r.measured = relative_error(fd, exact);
  r.threshold = threshold;
  r.passed = r.measured <= threshold;
  r.instance = describe(mdp, fm);
  r.details = {{"h", h}, {"grad_norm", exact.norm()}};
  return r;
}

double discounted_entropy(const Mdp& mdp, const PolicyD& policy) {
  const auto occ = occupancy(mdp, policy);
  const Eigen::ArrayXXd plogp =
      policy.pi.array().unaryExpr([](double p) { return p > 0.0 ? std::log(p) : 0.0; });
  return -(occ.d.array() * plogp).sum() / (1.0 - mdp.gamma);
}

double dual_value(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                  const VectorD& expert_features, double tol) {
  const auto sol = solve_soft_q(mdp, reward_table(fm, theta), tol);
  return mdp.rho.dot(sol.v) - expert_features.dot(theta);
}

DualityReport duality_gap(const Mdp& mdp, const FeatureMap& fm, const VectorD& expert_features,
                          const VectorD& theta_hat, double tol) {
  const auto sol = solve_soft_q(mdp, reward_table(fm, theta_hat), tol);
  const VectorD model = model_feature_expectation(mdp, fm, sol.policy);
  DualityReport rep;
  rep.dual = mdp.rho.dot(sol.v) - expert_features.dot(theta_hat);
  rep.primal = discounted_entropy(mdp, sol.policy);
  rep.gap = std::abs(rep.dual - rep.primal);
  rep.residual = fm.dim() > 0 ? (expert_features - model).cwiseAbs().maxCoeff() : 0.0;
  rep.residual_allowance = (expert_features - model).norm() * theta_hat.norm();
  return rep;
}

DualityReport duality_gap(const Mdp& mdp, const FeatureMap& fm, const Dataset& data,
                          const VectorD& theta_hat, double tol) {
  return duality_gap(mdp, fm, empirical_feature_expectation(fm, data, mdp.gamma), theta_hat, tol);
}

ProbeReport duality_probe(const Mdp& mdp, const FeatureMap& fm, const PolicyD& expert, int K,
                          double alpha0, double rel_tol, double res_tol) {
  MlIrlConfig cfg;
  cfg.K = K;
  cfg.alpha0 = alpha0;
  cfg.mode = GradientMode::kExact;
  cfg.q_eval_tol = 1e-12;
  cfg.diagnostics = false;
  const auto result = run_ml_irl(mdp, fm, Dataset{}, cfg, &expert);
  const VectorD target = occupancy_feature_expectation(fm, occupancy(mdp, expert).d, mdp.gamma);
  const auto rep = duality_gap(mdp, fm, target, result.params.theta);

  ProbeReport r;
  r.name = "duality";
  r.measured = rep.gap;
  r.threshold = rel_tol * (1.0 + std::abs(rep.dual));
  r.passed = rep.gap <= r.threshold && rep.residual <= res_tol;
  r.instance = describe(mdp, fm);
  r.details = {{"K", K},
               {"primal", rep.primal},
               {"dual", rep.dual},
               {"residual", rep.residual},
               {"residual_threshold", res_tol},
               {"residual_allowance", rep.residual_allowance}};
  return r;
}

ProbeReport concavity_probe(const Mdp& mdp, const FeatureMap& fm, const VectorD& expert_features,
                            int n_probes, std::uint64_t seed, double slack, double theta_scale) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_probes; ++i) {
    Rng rng(derive_seed(seed, 7, static_cast<std::uint64_t>(i)));
    const VectorD t1 = uniform_vector(rng, fm.dim(), theta_scale);
    const VectorD t2 = uniform_vector(rng, fm.dim(), theta_scale);
    const double lambda = rng.uniform();
    const double chord = lambda * surrogate(mdp, fm, t1, expert_features) +
                         (1.0 - lambda) * surrogate(mdp, fm, t2, expert_features);
    const double mid = surrogate(mdp, fm, lambda * t1 + (1.0 - lambda) * t2, expert_features);
    worst = std::max(worst, chord - mid);
  }
  ProbeReport r;
  r.name = "concavity";
  r.measured = n_probes > 0 ? worst : 0.0;
  r.threshold = slack;
  r.passed = r.measured <= slack;
  r.instance = describe(mdp, fm);
  r.seed = seed;
  r.details = {{"n_probes", n_probes}};
  return r;
}

ProbeReport contraction_probe(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                              int n_steps, double eps_app, std::uint64_t seed) {
  if (n_steps < 0) throw std::invalid_argument("contraction_probe: n_steps must be >= 0");
  if (!(eps_app >= 0.0)) throw std::invalid_argument("contraction_probe: eps_app must be >= 0");
  const auto reward = reward_table(fm, theta);
  const TableD q_star = solve_soft_q(mdp, reward, 1e-12).q;
  SolverOptions<double> opts;
  opts.mode = EvalMode::kDirect;
  const double g = mdp.gamma;
  const double step_slack = 2.0 * g * eps_app / (1.0 - g);

  Rng rng(derive_seed(seed, 8, 0));
  PolicyD pi = uniform_policy<double>(mdp.n_states, mdp.n_actions);
  TableD q = soft_policy_evaluation(mdp, reward, pi, opts).q;
  const double initial = (q_star - q).cwiseAbs().maxCoeff();
  double gap = initial;
  double worst_step = -std::numeric_limits<double>::infinity();
  double worst_monotone = -std::numeric_limits<double>::infinity();
  int violating_step = -1;
  std::vector<double> gaps{initial};
  for (int k = 0; k < n_steps; ++k) {
    TableD q_est = q;
    if (eps_app > 0.0) {
      for (Eigen::Index i = 0; i < q_est.size(); ++i) {
        q_est.data()[i] += eps_app * (2.0 * rng.uniform() - 1.0);
      }
    }
    pi = softmax_policy(q_est);
    const TableD q_next = soft_policy_evaluation(mdp, reward, pi, opts).q;
    const double next_gap = (q_star - q_next).cwiseAbs().maxCoeff();
    const double excess = next_gap - (g * gap + step_slack + 1e-9);
    if (excess > worst_step) worst_step = excess;
    if (excess > 0.0 && violating_step < 0) violating_step = k;
    if (eps_app == 0.0) {
      const double drop = (q - q_next).maxCoeff();
      worst_monotone = std::max(worst_monotone, drop);
      if (drop > 1e-9 && violating_step < 0) violating_step = k;
    }
    q = q_next;
    gap = next_gap;
    gaps.push_back(gap);
  }
  const double envelope = std::pow(g, n_steps) * initial +
                          2.0 * g * eps_app / ((1.0 - g) * (1.0 - g)) + 1e-9 / (1.0 - g);

  ProbeReport r;
  r.name = eps_app > 0.0 ? "contraction_noisy" : "contraction";
  r.measured = n_steps > 0 ? worst_step : 0.0;
  r.threshold = 0.0;
  r.passed = n_steps == 0 ||
             (worst_step <= 0.0 && (eps_app > 0.0 || worst_monotone <= 1e-9) && gap <= envelope);
  r.instance = describe(mdp, fm);
  r.seed = seed;
  r.details = {{"n_steps", n_steps},         {"eps_app", eps_app},
               {"initial_gap", initial},     {"final_gap", gap},
               {"final_envelope", envelope}, {"plateau_bound", 2.0 * g * eps_app / ((1.0 - g) * (1.0 - g))},
               {"gaps", gaps}};
  if (eps_app == 0.0 && n_steps > 0) r.details["worst_monotone_drop"] = worst_monotone;
  if (violating_step >= 0) r.details["violating_step"] = violating_step;
  return r;
}

double certified_lq(const Mdp& mdp, const FeatureMap& fm) {
  return fm.max_norm() / (1.0 - mdp.gamma);
}

ProbeReport lipschitz_probe(const Mdp& mdp, const FeatureMap& fm, int n_pairs, std::uint64_t seed,
                            double theta_scale) {
  const double lq = certified_lq(mdp, fm);
  double worst = -std::numeric_limits<double>::infinity();
  double worst_ratio = 0.0;
  int worst_pair = -1;
  for (int i = 0; i < n_pairs; ++i) {
    Rng rng(derive_seed(seed, 6, static_cast<std::uint64_t>(i)));
    const VectorD t1 = uniform_vector(rng, fm.dim(), theta_scale);
    const VectorD t2 = uniform_vector(rng, fm.dim(), theta_scale);
    const TableD q1 = solve_soft_q(mdp, reward_table(fm, t1), 1e-12).q;
    const TableD q2 = solve_soft_q(mdp, reward_table(fm, t2), 1e-12).q;
    const double dq = (q1 - q2).cwiseAbs().maxCoeff();
    const double dt = (t1 - t2).norm();
    const double excess = dq - (lq * dt + 1e-8);
    if (excess > worst) {
      worst = excess;
      worst_pair = i;
    }
    if (dt > 0.0) worst_ratio = std::max(worst_ratio, dq / (lq * dt));
  }
  ProbeReport r;
  r.name = "lipschitz";
  r.measured = n_pairs > 0 ? worst : 0.0;
  r.threshold = 0.0;
  r.passed = r.measured <= 0.0;
  r.instance = describe(mdp, fm);
  r.seed = seed;
  r.details = {{"L_q", lq}, {"L_r", fm.max_norm()}, {"n_pairs", n_pairs}, {"max_ratio", worst_ratio}};
  if (!r.passed) r.details["violating_pair"] = worst_pair;
  return r;
}

double sample_gumbel(Rng& rng) {
  return -std::log(-std::log(rng.uniform_open())) - std::numbers::egamma;
}

VectorD gumbel_argmax_frequencies(const VectorD& q, long n_samples, std::uint64_t seed) {
  if (n_samples < 1 || q.size() == 0) throw std::invalid_argument("gumbel_argmax_frequencies: empty input");
  Rng rng(seed);
  VectorD counts = VectorD::Zero(q.size());
  for (long n = 0; n < n_samples; ++n) {
    Eigen::Index best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < q.size(); ++a) {
      const double val = q(a) + sample_gumbel(rng);
      if (val > best_val) {
        best_val = val;
        best = a;
      }
    }
    counts(best) += 1.0;
  }
  return counts / static_cast<double>(n_samples);
}

ProbeReport gumbel_equivalence_check(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                                     long n_samples, std::uint64_t seed) {
  if (n_samples < 10000) throw std::invalid_argument("gumbel_equivalence_check: need n_samples >= 1e4");
  const auto sol = solve_soft_q(mdp, reward_table(fm, theta), 1e-12);
  double worst = 0.0;
  Eigen::Index worst_state = 0;
  std::vector<double> tvs;
  for (Eigen::Index s = 0; s < mdp.n_states; ++s) {
    const VectorD freq = gumbel_argmax_frequencies(sol.q.row(s).transpose(), n_samples,
                                                   derive_seed(seed, 4, static_cast<std::uint64_t>(s)));
    const double tv = 0.5 * (freq - sol.policy.pi.row(s).transpose()).cwiseAbs().sum();
    tvs.push_back(tv);
    if (tv > worst) {
      worst = tv;
      worst_state = s;
    }
  }
  ProbeReport r;
  r.name = "gumbel";
  r.measured = worst;
  r.threshold = std::max(0.02, 4.0 * std::sqrt(static_cast<double>(mdp.n_actions) / n_samples));
  r.passed = worst <= r.threshold;
  r.instance = describe(mdp, fm);
  r.seed = seed;
  r.details = {{"n_samples", n_samples}, {"worst_state", worst_state}, {"tv_per_state", tvs}};
  return r;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 paired points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("loglog_slope: values must be positive");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (denom <= 0.0) throw std::invalid_argument("loglog_slope: x values are all equal");
  return (n * sxy - sx * sy) / denom;
}

double rate_check(const IterateLog& log, double burn_in_fraction) {
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
    throw std::invalid_argument("rate_check: burn_in_fraction must lie in [0, 1)");
  }
  const std::size_t K = log.size();
  std::vector<double> x, y;
  double acc = 0.0;
  for (std::size_t i = 0; i < K; ++i) {
    const double g = log.records[i].grad_norm_sq;
    if (!std::isfinite(g)) throw std::invalid_argument("rate_check: log lacks exact gradient norms");
    acc += g;
    const double k = static_cast<double>(i + 1);
    if (k >= burn_in_fraction * static_cast<double>(K)) {
      x.push_back(k);
      y.push_back(acc / k);
    }
  }
  if (x.size() < 50) throw std::invalid_argument("rate_check: fewer than 50 usable points");
  return loglog_slope(x, y);
}

double average_policy_gap(const IterateLog& log) {
  if (log.size() == 0) throw std::invalid_argument("average_policy_gap: empty log");
  double acc = 0.0;
  for (const auto& r : log.records) acc += r.policy_gap;
  return acc / static_cast<double>(log.size());
}

ProbeReport rate_probe(const Mdp& mdp, const FeatureMap& fm, const PolicyD& expert, int K,
                       double alpha0, double max_slope) {
  MlIrlConfig cfg;
  cfg.K = K;
  cfg.alpha0 = alpha0;
  cfg.mode = GradientMode::kExact;
  cfg.q_eval_tol = 1e-12;
  const auto result = run_ml_irl(mdp, fm, Dataset{}, cfg, &expert);
  ProbeReport r;
  r.name = "rate";
  r.measured = rate_check(result.log, 0.1);
  r.threshold = max_slope;
  r.passed = r.measured <= max_slope;
  r.instance = describe(mdp, fm);
  r.details = {{"K", K},
               {"alpha0", alpha0},
               {"average_policy_gap", average_policy_gap(result.log)},
               {"final_grad_norm_sq", result.log.records.back().grad_norm_sq}};
  return r;
}

double binomial_cdf(long k, long n, double p) {
  if (n < 0 || !(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial_cdf: bad parameters");
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  if (p == 0.0) return 1.0;
  if (p == 1.0) return 0.0;
  double total = 0.0;
  for (long i = 0; i <= k; ++i) {
    const double log_pmf = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
                           i * std::log(p) + (n - i) * std::log1p(-p);
    total += std::exp(log_pmf);
  }
  return std::min(1.0, total);
}

ProbeReport concentration_coverage(const Mdp& mdp, const FeatureMap& fm, const VectorD& theta,
                                   const PolicyD& expert, int n_resamples, int n_traj,
                                   double delta, std::uint64_t seed, double c_r, int horizon) {
  if (n_resamples < 1 || n_traj < 1) throw std::invalid_argument("concentration_coverage: need positive sizes");
  FeatureMap fm_used = fm;
  VectorD theta_used = theta;
  const auto rewards = reward_table(fm, theta, c_r);
  nlohmann::json rescale = {{"applied", false}};
  if (!rewards.within_bound) {
    const double lo = rewards.values.minCoeff(), hi = rewards.values.maxCoeff();
    const double scale = hi > lo ? c_r / (hi - lo) : 0.0;
    fm_used = FeatureMap::one_hot_tabular(mdp.n_states, mdp.n_actions);
    const TableD r = (rewards.values.array() - lo) * scale;
    theta_used = r.reshaped<Eigen::RowMajor>();
    rescale = {{"applied", true}, {"offset", lo}, {"scale", scale}};
  }
  const int H = horizon > 0 ? horizon : default_horizon(mdp.gamma);
  const double bound = concentration_bound(c_r, mdp.gamma, delta, n_traj);
  const double exact = exact_likelihood(mdp, fm_used, theta_used, expert, 1e-12);

  long covered = 0;
  double worst = 0.0;
  for (int i = 0; i < n_resamples; ++i) {
    const auto data =
        make_expert_dataset(mdp, expert, n_traj, H, derive_seed(seed, 5, static_cast<std::uint64_t>(i)));
    const double dev = std::abs(exact - surrogate_likelihood(mdp, fm_used, theta_used, data, 1e-12));
    worst = std::max(worst, dev);
    if (dev <= bound) ++covered;
  }
  const double coverage = static_cast<double>(covered) / n_resamples;
  const double p_value = binomial_cdf(covered, n_resamples, 1.0 - delta);

  ProbeReport r;
  r.name = "concentration";
  r.measured = coverage;
  r.threshold = 1.0 - delta;
  r.passed = p_value >= 0.01;
  r.instance = describe(mdp, fm);
  r.seed = seed;
  r.details = {{"bound", bound},         {"delta", delta},        {"n_traj", n_traj},
               {"n_resamples", n_resamples}, {"horizon", H},      {"p_value", p_value},
               {"max_deviation", worst}, {"rescale", rescale}};
  return r;
}

}  // namespace irl
