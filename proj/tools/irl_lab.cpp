// irl_lab: build scenarios, sample experts, run ML-IRL / MaxEnt-IRL, verify, plot.
//
// Exit codes: 0 ok, 1 unexpected, 2 config, 3 I/O, 4 numeric divergence, 5 probe failure.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "irl/analysis.hpp"
#include "irl/config.hpp"
#include "irl/envs.hpp"
#include "irl/likelihood.hpp"
#include "irl/maxent_irl.hpp"
#include "irl/ml_irl.hpp"
#include "irl/plot.hpp"
#include "irl/rollout.hpp"

namespace fs = std::filesystem;
using namespace irl;

namespace {

constexpr int kExitConfig = 2, kExitIo = 3, kExitNumeric = 4, kExitProbe = 5;

struct Globals {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out = ".";
  int threads = 0;
};

class ProbeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("IRL_LAB_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::logic_error&) {
    }
    throw ConfigError("IRL_LAB_THREADS must be a positive integer");
  }
  return 1;
}

ExperimentConfig load_config(const Globals& g) {
  return g.config_path.empty() ? ExperimentConfig{} : load_experiment_config(g.config_path);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir + "'");
  return fs::path(dir);
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + p.string() + "'");
}

// Artifacts are listed relative to the manifest so two runs into different
// directories produce identical manifests.
void write_manifest(const fs::path& dir, const std::string& command, const nlohmann::json& config,
                    std::uint64_t seed, const std::vector<std::string>& artifacts,
                    const nlohmann::json& inputs = nlohmann::json::object()) {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& name : artifacts) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) throw IoError("artifact '" + p.string() + "' was not written");
    files.push_back({{"path", name}, {"fnv1a64", fnv1a(read_file(p))}});
  }
  const nlohmann::json m = {{"command", command}, {"config", config},  {"seeds", {seed}},
                            {"output_dir", "."},  {"inputs", inputs},  {"artifacts", files}};
  write_text(dir / (command + "_manifest.json"), m.dump(2) + "\n");
}

PolicyD expert_policy(const Scenario& sc) {
  return solve_soft_q(sc.mdp, reward_table(sc.features, sc.theta_star), 1e-12).policy;
}

// State rewards on the scenario grid, shifted so the minimum is 0 (state-only
// rewards carry no reference action to anchor on). Without a grid, the
// [state][action] table anchored on action 0.
TableD reward_heatmap(const Scenario& sc, const FeatureMap& fm, const VectorD& theta) {
  const TableD r = reward_table(fm, theta).values;
  if (sc.grid && fm.state_only()) {
    const auto [rows, cols] = *sc.grid;
    const VectorD state = r.col(0);
    TableD grid = state.reshaped<Eigen::RowMajor>(rows, cols);
    return grid.array() - grid.minCoeff();
  }
  return anchor_rewards(r, 0);
}

int cmd_make_expert(const Globals& g, int n_traj_flag, int horizon_flag) {
  const auto cfg = load_config(g);
  const auto sc = build_scenario(cfg.scenario);
  const int n_traj = n_traj_flag > 0 ? n_traj_flag : cfg.expert.n_traj;
  const int horizon = horizon_flag > 0 ? horizon_flag
                      : cfg.expert.horizon > 0 ? cfg.expert.horizon
                                               : default_horizon(sc.mdp.gamma);
  if (n_traj < 1) throw ConfigError("--n-traj must be >= 1");
  const auto expert = expert_policy(sc);
  const auto data = make_expert_dataset(sc.mdp, expert, n_traj, horizon, g.seed,
                                        "soft-optimal(theta*)", resolve_threads(g.threads));
  const auto dir = prepare_out(g.out);
  {
    std::ostringstream os;
    write_dataset(os, data);
    write_text(dir / "dataset.jsonl", os.str());
  }
  const double mean_return =
      empirical_feature_expectation(sc.features, data, sc.mdp.gamma).dot(sc.theta_star.theta);
  write_manifest(dir, "make_expert", to_json(cfg), g.seed, {"dataset.jsonl"});
  std::cout << "n_traj=" << n_traj << " horizon=" << horizon
            << " mean_discounted_return=" << format_double(mean_return) << '\n';
  return 0;
}

int cmd_run(const Globals& g, const std::string& algorithm, const std::string& dataset_path,
            bool wall_time) {
  auto cfg = load_config(g);
  const auto sc = build_scenario(cfg.scenario);
  const auto expert = expert_policy(sc);
  const bool use_expert_policy = cfg.target == TargetSource::kExpertPolicy;

  Dataset data;
  nlohmann::json inputs = nlohmann::json::object();
  if (!dataset_path.empty()) {
    const std::string bytes = read_file(dataset_path);
    std::istringstream is(bytes);
    data = read_dataset(is);
    inputs["dataset_fnv1a64"] = fnv1a(bytes);
  } else if (!use_expert_policy ||
             (algorithm != "maxent" && cfg.ml_irl.mode == GradientMode::kStochastic)) {
    throw ConfigError("run: --dataset is required unless ml_irl.target is 'expert_policy' (exact mode)");
  }
  if (!dataset_path.empty()) validate_dataset(data, sc.mdp.n_states, sc.mdp.n_actions);

  FeatureMap fm = sc.features;
  if (algorithm == "ml-irl-state-only" && !fm.state_only()) {
    fm = FeatureMap::one_hot_state(sc.mdp.n_states, sc.mdp.n_actions);
  }
  const PolicyD* target_policy = use_expert_policy ? &expert : nullptr;

  IrlResult result;
  if (algorithm == "maxent") {
    MaxEntConfig mc = cfg.maxent;
    mc.seed = g.seed;
    mc.record_wall_time = wall_time;
    result = run_maxent_irl(sc.mdp, fm, data, mc, target_policy);
  } else {
    MlIrlConfig mc = cfg.ml_irl;
    mc.seed = g.seed;
    mc.record_wall_time = wall_time;
    result = run_ml_irl(sc.mdp, fm, data, mc, target_policy);
    if (algorithm == "ml-irl-state-only") result.log.algorithm += "-state-only";
  }

  const VectorD target = use_expert_policy
                             ? occupancy_feature_expectation(fm, occupancy(sc.mdp, expert).d, sc.mdp.gamma)
                             : empirical_feature_expectation(fm, data, sc.mdp.gamma);
  nlohmann::json extra = {
      {"scenario", sc.name},
      {"seed", g.seed},
      {"mean_kl_under_expert", mean_kl_under_expert(sc.mdp, expert, result.policy)},
      {"feature_matching_residual", feature_matching_residual(sc.mdp, fm, result.params.theta, target)},
      {"feature_kind", to_string(fm.kind())}};
  if (fm.state_only()) {
    extra["value_gap"] = value_gap_objective(sc.mdp, fm, result.params.theta, expert);
  }

  const auto dir = prepare_out(g.out);
  std::vector<std::string> artifacts = {"iterates.csv", "result.json"};
  {
    std::ostringstream os;
    write_iterate_csv(os, result.log);
    write_text(dir / "iterates.csv", os.str());
  }
  {
    std::ostringstream os;
    write_result_json(os, result, extra);
    write_text(dir / "result.json", os.str());
  }
  {
    std::ostringstream os;
    write_matrix_csv(os, reward_heatmap(sc, fm, result.params.theta));
    write_text(dir / "reward_heatmap.csv", os.str());
    artifacts.push_back("reward_heatmap.csv");
  }
  if (fm.dim() == sc.features.dim() && fm.kind() == sc.features.kind()) {
    std::ostringstream os;
    write_matrix_csv(os, reward_heatmap(sc, sc.features, sc.theta_star.theta));
    write_text(dir / "true_reward_heatmap.csv", os.str());
    artifacts.push_back("true_reward_heatmap.csv");
  }
  nlohmann::json config = to_json(cfg);
  config["algorithm"] = algorithm;
  write_manifest(dir, "run", config, g.seed, artifacts, inputs);

  const auto& last = result.log.records;
  std::cout << algorithm << ": iterations=" << last.size();
  if (!last.empty()) {
    std::cout << " final_L_hat=" << format_double(last.back().surrogate)
              << " backups=" << last.back().backups;
  }
  std::cout << " mean_kl=" << format_double(extra["mean_kl_under_expert"].get<double>()) << '\n';
  return 0;
}

int cmd_verify(const Globals& g) {
  ExperimentConfig cfg = load_config(g);
  if (g.config_path.empty()) {
    RandomMdpSpec spec;
    spec.seed = g.seed;
    cfg.scenario = spec;
  }
  const auto sc = build_scenario(cfg.scenario);  // validation happens here, before any probe
  const auto expert = expert_policy(sc);
  const auto& v = cfg.verify;
  const auto& mdp = sc.mdp;
  const auto& fm = sc.features;
  const VectorD phi_e = occupancy_feature_expectation(fm, occupancy(mdp, expert).d, mdp.gamma);
  VectorD theta_probe(fm.dim());
  {
    Rng rng(derive_seed(g.seed, 9, 0));
    for (Eigen::Index i = 0; i < theta_probe.size(); ++i) theta_probe(i) = 2.0 * rng.uniform() - 1.0;
  }

  const std::vector<std::function<ProbeReport()>> probes = {
      [&] { return gradient_fd_probe(mdp, fm, theta_probe, phi_e, v.fd_h); },
      [&] { return concavity_probe(mdp, fm, phi_e, v.concavity_probes, g.seed); },
      [&] { return duality_probe(mdp, fm, expert, v.duality_K); },
      [&] { return contraction_probe(mdp, fm, sc.theta_star.theta, v.contraction_steps, 0.0, g.seed); },
      [&] {
        return contraction_probe(mdp, fm, sc.theta_star.theta, v.contraction_steps, v.eps_app, g.seed);
      },
      [&] { return lipschitz_probe(mdp, fm, v.lipschitz_pairs, g.seed); },
      [&] { return gumbel_equivalence_check(mdp, fm, sc.theta_star.theta, v.gumbel_samples, g.seed); },
      [&] {
        return concentration_coverage(mdp, fm, sc.theta_star.theta, expert, v.coverage_resamples,
                                      v.coverage_n_traj, v.delta, g.seed);
      },
      [&] { return rate_probe(mdp, fm, expert, v.rate_K); },
  };

  // Probes are independent; results land in fixed slots so output order never
  // depends on scheduling.
  std::vector<ProbeReport> reports(probes.size());
  std::vector<std::exception_ptr> errors(probes.size());
  const int threads = std::min<int>(resolve_threads(g.threads), static_cast<int>(probes.size()));
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = static_cast<std::size_t>(t); i < probes.size(); i += threads) {
        try {
          reports[i] = probes[i]();
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const auto dir = prepare_out(g.out);
  const nlohmann::json manifest = verification_manifest(reports);
  write_text(dir / "verification.json", manifest.dump(2) + "\n");
  write_manifest(dir, "verify", to_json(cfg), g.seed, {"verification.json"});
  for (const auto& r : reports) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " measured=" << format_double(r.measured)
              << " threshold=" << format_double(r.threshold) << '\n';
  }
  if (!manifest.at("passed").get<bool>()) {
    nlohmann::json failing = nlohmann::json::array();
    for (const auto& r : reports) {
      if (!r.passed) failing.push_back(r);
    }
    throw ProbeFailure(failing.dump());
  }
  return 0;
}

int cmd_plot(const Globals& g, const std::string& kind, const std::vector<std::string>& csvs,
             std::vector<std::string> labels, const std::string& x_axis, const std::string& y_axis,
             bool loglog, std::string name) {
  if (csvs.empty()) throw ConfigError("plot: at least one --csv is required");
  std::string svg;
  if (kind == "convergence") {
    if (x_axis != "iterations" && x_axis != "backups") throw ConfigError("plot: --x must be iterations or backups");
    if (y_axis != "L_hat" && y_axis != "grad_norm_sq" && y_axis != "policy_gap") {
      throw ConfigError("plot: --y must be L_hat, grad_norm_sq or policy_gap");
    }
    std::vector<Series> series;
    for (std::size_t i = 0; i < csvs.size(); ++i) {
      std::istringstream is(read_file(csvs[i]));
      const auto log = read_iterate_csv(is);
      if (log.size() == 0) throw IoError("plot: '" + csvs[i] + "' has no rows");
      Series s;
      s.label = i < labels.size() ? labels[i] : fs::path(csvs[i]).parent_path().filename().string();
      if (s.label.empty()) s.label = fs::path(csvs[i]).stem().string();
      for (const auto& r : log.records) {
        s.x.push_back(x_axis == "backups" ? static_cast<double>(r.backups) : r.k + 1.0);
        s.y.push_back(y_axis == "L_hat" ? r.surrogate : y_axis == "grad_norm_sq" ? r.grad_norm_sq : r.policy_gap);
      }
      series.push_back(std::move(s));
    }
    svg = convergence_svg(series, x_axis == "backups" ? "cumulative soft-Bellman backups" : "iteration",
                          y_axis, loglog);
  } else if (kind == "heatmap") {
    std::istringstream is(read_file(csvs.front()));
    TableD m;
    try {
      m = read_matrix_csv(is);
    } catch (const std::invalid_argument& e) {
      throw IoError(std::string("plot: ") + e.what());
    }
    svg = heatmap_svg(m, labels.empty() ? fs::path(csvs.front()).stem().string() : labels.front());
  } else {
    throw ConfigError("plot: kind must be convergence or heatmap");
  }
  const auto dir = prepare_out(g.out);
  if (name.empty()) name = kind + ".svg";
  write_text(dir / name, svg);
  std::cout << (dir / name).string() << '\n';
  return 0;
}

int report(const char* kind, int code, const std::string& message) {
  nlohmann::json err = {{"error", {{"kind", kind}, {"exit_code", code}}}};
  // Probe failures carry their reports as JSON.
  const auto parsed = nlohmann::json::parse(message, nullptr, false);
  err["error"]["message"] = parsed.is_discarded() ? nlohmann::json(message) : parsed;
  std::cerr << err.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular maximum-likelihood inverse RL lab"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "experiment config (JSON)");
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--threads", g.threads, "worker threads (fallback: IRL_LAB_THREADS)")->check(CLI::PositiveNumber);

  auto* make_expert = app.add_subcommand("make-expert", "sample expert trajectories from pi_theta*");
  int n_traj = 0, horizon = 0;
  make_expert->add_option("--n-traj", n_traj, "number of trajectories (default from config)");
  make_expert->add_option("--horizon", horizon, "truncation horizon (default from gamma)");

  auto* run = app.add_subcommand("run", "run an IRL algorithm");
  std::string algorithm, dataset;
  bool wall_time = false;
  run->add_option("algorithm", algorithm, "ml-irl | ml-irl-state-only | maxent")
      ->required()
      ->check(CLI::IsMember({"ml-irl", "ml-irl-state-only", "maxent"}));
  run->add_option("--dataset", dataset, "expert dataset (JSON lines)");
  run->add_flag("--wall-time", wall_time, "fill the wall_ms column (makes output non-reproducible)");

  auto* verify = app.add_subcommand("verify", "run the verification probes");

  auto* plot = app.add_subcommand("plot", "render CSV output as SVG");
  std::string kind, x_axis = "iterations", y_axis = "L_hat", name;
  std::vector<std::string> csvs, labels;
  bool loglog = false;
  plot->add_option("kind", kind, "convergence | heatmap")->required()->check(CLI::IsMember({"convergence", "heatmap"}));
  plot->add_option("--csv", csvs, "input CSV (repeatable)")->required();
  plot->add_option("--label", labels, "legend label per CSV");
  plot->add_option("--x", x_axis, "iterations | backups");
  plot->add_option("--y", y_axis, "L_hat | grad_norm_sq | policy_gap");
  plot->add_flag("--loglog", loglog, "log-log axes");
  plot->add_option("--name", name, "output file name inside --out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*make_expert) return cmd_make_expert(g, n_traj, horizon);
    if (*run) return cmd_run(g, algorithm, dataset, wall_time);
    if (*verify) return cmd_verify(g);
    if (*plot) return cmd_plot(g, kind, csvs, labels, x_axis, y_axis, loglog, name);
  } catch (const ProbeFailure& e) {
    return report("probe", kExitProbe, e.what());
  } catch (const IoError& e) {
    return report("io", kExitIo, e.what());
  } catch (const NumericError& e) {
    return report("numeric", kExitNumeric, e.what());
  } catch (const std::invalid_argument& e) {
    // ConfigError, MdpError and ShapeError all derive from invalid_argument.
    return report("config", kExitConfig, e.what());
  } catch (const std::exception& e) {
    return report("internal", 1, e.what());
  }
  return 1;
}
