#include <doctest.h>

#include <nlohmann/json.hpp>

#include <sstream>

#include "irl/analysis.hpp"
#include "irl/errors.hpp"
#include "irl/likelihood.hpp"
#include "irl/ml_irl.hpp"
#include "support.hpp"

using namespace irl;

namespace {

std::string csv_of(const IterateLog& log) {
  std::ostringstream os;
  write_iterate_csv(os, log);
  return os.str();
}

MlIrlConfig exact_cfg(int K, double alpha0 = 1.0) {
  MlIrlConfig c;
  c.K = K;
  c.alpha0 = alpha0;
  c.mode = GradientMode::kExact;
  c.q_eval_tol = 1e-12;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  MlIrlConfig c;
  CHECK_NOTHROW(c.validate());
  c.K = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.sigma = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.alpha0 = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.q_eval_tol = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.eval_sweeps = 3;
  CHECK_NOTHROW(c.validate());
  c = {};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("one iteration from the expert's own parameters does not move") {
  // theta0 = 0 makes pi_theta0 uniform, and the uniform-policy soft Q is constant
  // per state, so pi_1 is uniform as well.
  const auto sc = test::random_instance(1);
  const PolicyD uniform = uniform_policy<double>(5, 3);
  const auto res = run_ml_irl(sc.mdp, sc.features, Dataset{}, exact_cfg(1), &uniform);
  REQUIRE(res.log.size() == 1);
  CHECK(std::sqrt(res.log.records[0].est_grad_norm_sq) <= 1e-6);
  CHECK(res.params.theta.cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(res.log.records[0].policy_gap <= 1e-9);
}

TEST_CASE("stochastic runs are deterministic given the seed") {
  const auto sc = build_gridworld(GridWorldSpec::standard());
  const auto data = make_expert_dataset(sc.mdp, test::optimal_policy(sc), 30, default_horizon(0.9), 0);
  MlIrlConfig c;
  c.K = 60;
  c.seed = 42;
  c.eval_noise = 0.05;
  const auto a = run_ml_irl(sc.mdp, sc.features, data, c);
  const auto b = run_ml_irl(sc.mdp, sc.features, data, c);
  CHECK(a.log.size() == 60);
  CHECK(csv_of(a.log) == csv_of(b.log));
  CHECK(a.params.theta == b.params.theta);
  c.seed = 43;
  CHECK(csv_of(run_ml_irl(sc.mdp, sc.features, data, c).log) != csv_of(a.log));
}

TEST_CASE("iterate log invariants") {
  const auto sc = test::random_instance(2);
  const auto data = make_expert_dataset(sc.mdp, test::optimal_policy(sc), 10, 50, 1);
  MlIrlConfig c;
  c.K = 40;
  const auto res = run_ml_irl(sc.mdp, sc.features, data, c);
  REQUIRE(res.log.size() == 40);
  for (std::size_t k = 0; k < 40; ++k) {
    const auto& r = res.log.records[k];
    CHECK(r.k == static_cast<int>(k));
    CHECK(std::isfinite(r.surrogate));
    CHECK(std::isfinite(r.policy_gap));
    CHECK_FALSE(r.wall_ms.has_value());
    if (k > 0) CHECK(r.backups >= res.log.records[k - 1].backups);
  }
  // The logged surrogate is the library's surrogate at theta_k.
  CHECK(res.log.records[0].surrogate ==
        doctest::Approx(surrogate_likelihood(sc.mdp, sc.features, VectorD(VectorD::Zero(4)), data)).epsilon(1e-9));
}

TEST_CASE("eval_sweeps counts one backup per sweep") {
  const auto sc = test::random_instance(3);
  const PolicyD expert = test::optimal_policy(sc);
  MlIrlConfig c = exact_cfg(25);
  c.eval_sweeps = 2;
  const auto res = run_ml_irl(sc.mdp, sc.features, Dataset{}, c, &expert);
  CHECK(res.log.records.back().backups == 50);
}

TEST_CASE("policy_gap hand arithmetic") {
  PolicyD a, b;
  a.pi.resize(1, 2);
  b.pi.resize(1, 2);
  const double e = std::exp(1.0);
  a.pi << 0.5, 0.5;
  b.pi << e / (e + 1), 1 / (e + 1);
  const double want = std::max(std::abs(std::log(0.5 * (e + 1) / e)), std::abs(std::log(0.5 * (e + 1))));
  CHECK(policy_gap(a, b) == doctest::Approx(want).epsilon(1e-14));
  CHECK(policy_gap(a, b) == policy_gap(b, a));
  CHECK(policy_gap(a, a) == 0.0);
  PolicyD z;
  z.pi.resize(1, 2);
  z.pi << 1.0, 0.0;
  CHECK_THROWS_AS(policy_gap(a, z), std::invalid_argument);
}

TEST_CASE("value gap objective") {
  const auto sc = build_gridworld(GridWorldSpec::standard());
  Rng rng(4);
  for (int i = 0; i < 5; ++i) {
    const VectorD theta = test::random_vector(rng, 25, 1.0);
    const PolicyD pth = solve_soft_q(sc.mdp, reward_table(sc.features, theta), 1e-12).policy;
    CHECK(std::abs(value_gap_objective(sc.mdp, sc.features, theta, pth, 1e-12)) <= 1e-9);
    for (int j = 0; j < 10; ++j) {
      CHECK(value_gap_objective(sc.mdp, sc.features, theta, test::random_policy(rng, 25, 5), 1e-10) >= -2e-10);
    }
  }
  const auto rnd = test::random_instance(5);
  CHECK_THROWS_AS(value_gap_objective(rnd.mdp, rnd.features, rnd.theta_star.theta, test::optimal_policy(rnd)),
                  std::invalid_argument);
}

TEST_CASE("value gap and negative likelihood share their gradient") {
  const auto sc = build_random_mdp(6, 3, 0, 0.9, 0.0, 6);
  const auto fm = FeatureMap::one_hot_state(6, 3);
  Rng rng(6);
  const PolicyD expert = test::random_policy(rng, 6, 3);
  const VectorD theta = test::random_vector(rng, 6, 1.0);
  auto gap = [&](const VectorD& t) { return value_gap_objective(sc.mdp, fm, t, expert, 1e-12); };
  auto neg_l = [&](const VectorD& t) { return -exact_likelihood(sc.mdp, fm, t, expert, 1e-12); };
  const VectorD g1 = fd_gradient(gap, theta, 1e-5), g2 = fd_gradient(neg_l, theta, 1e-5);
  CHECK((g1 - g2).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("average policy gap shrinks as K grows") {
  const auto sc = test::random_instance(7, 5, 3, 4);
  const PolicyD expert = test::optimal_policy(sc);
  const double a200 = average_policy_gap(run_ml_irl(sc.mdp, sc.features, Dataset{}, exact_cfg(200), &expert).log);
  const double a800 = average_policy_gap(run_ml_irl(sc.mdp, sc.features, Dataset{}, exact_cfg(800), &expert).log);
  CHECK(a800 <= 0.75 * a200);
}

TEST_CASE("exact mode reaches feature matching") {
  const auto sc = test::random_instance(8, 5, 3, 4);
  const PolicyD expert = test::optimal_policy(sc);
  const auto res = run_ml_irl(sc.mdp, sc.features, Dataset{}, exact_cfg(3000), &expert);
  const VectorD phi_e = model_feature_expectation(sc.mdp, sc.features, expert);
  const VectorD g = exact_gradient_from_features(sc.mdp, sc.features, res.params.theta, phi_e, 1e-12);
  CHECK(g.cwiseAbs().maxCoeff() <= 1e-3);
  CHECK(mean_kl_under_expert(sc.mdp, expert, res.policy) <= 1e-4);
  CHECK(mean_kl_under_expert(sc.mdp, expert, expert) == 0.0);
}

TEST_CASE("stochastic gradient is unbiased up to truncation") {
  // With K = 1 and alpha0 = 1 the returned theta is the gradient estimate g_0,
  // taken at theta_0 = 0 with pi_1 uniform.
  const auto sc = test::random_instance(9, 5, 3, 3, 0.8);
  const auto data = make_expert_dataset(sc.mdp, test::optimal_policy(sc), 6, 40, 2);
  MlIrlConfig c;
  c.K = 1;
  c.horizon = 40;
  c.diagnostics = false;
  const int n = 10000;
  std::vector<VectorD> draws;
  VectorD mean = VectorD::Zero(3);
  for (int i = 0; i < n; ++i) {
    c.seed = static_cast<std::uint64_t>(i);
    draws.push_back(run_ml_irl(sc.mdp, sc.features, data, c).params.theta);
    mean += draws.back() / n;
  }
  const VectorD exact = exact_gradient(sc.mdp, sc.features, VectorD(VectorD::Zero(3)), data, 1e-12);
  const double bias = std::pow(0.8, 40) * sc.features.max_norm() / (1 - 0.8);
  for (Eigen::Index j = 0; j < 3; ++j) {
    double var = 0.0;
    for (const auto& d : draws) var += (d[j] - mean[j]) * (d[j] - mean[j]) / (n - 1);
    CHECK(std::abs(mean[j] - exact[j]) <= 3 * std::sqrt(var / n) + bias);
  }
}

TEST_CASE("anchoring, divergence and shape errors") {
  const auto sc = test::random_instance(10);
  const PolicyD expert = test::optimal_policy(sc);
  MlIrlConfig c = exact_cfg(5);
  c.anchor_action = 2;
  const auto res = run_ml_irl(sc.mdp, sc.features, Dataset{}, c, &expert);
  REQUIRE(res.anchored_rewards.has_value());
  CHECK(res.anchored_rewards->col(2).isZero());
  c.anchor_action = 3;
  CHECK_THROWS_AS(run_ml_irl(sc.mdp, sc.features, Dataset{}, c, &expert), ConfigError);

  MlIrlConfig wild = exact_cfg(50, 1e300);
  CHECK_THROWS_AS(run_ml_irl(sc.mdp, sc.features, Dataset{}, wild, &expert), NumericError);

  MlIrlConfig stoch;
  stoch.K = 2;
  CHECK_THROWS_AS(run_ml_irl(sc.mdp, sc.features, Dataset{}, stoch), ConfigError);
  stoch.theta0 = VectorD::Zero(7);
  const auto data = make_expert_dataset(sc.mdp, expert, 2, 10, 0);
  CHECK_THROWS_AS(run_ml_irl(sc.mdp, sc.features, data, stoch), ShapeError);
  CHECK_THROWS_AS(run_ml_irl(sc.mdp, FeatureMap::one_hot_tabular(4, 3), data, MlIrlConfig{}), ShapeError);
}

TEST_CASE("iterate CSV round trip and errors") {
  const auto sc = test::random_instance(11);
  const auto data = make_expert_dataset(sc.mdp, test::optimal_policy(sc), 4, 30, 0);
  MlIrlConfig c;
  c.K = 12;
  c.record_wall_time = true;
  const auto res = run_ml_irl(sc.mdp, sc.features, data, c);
  const std::string text = csv_of(res.log);
  CHECK(text.rfind("k,L_hat,grad_norm_sq,policy_gap,backups,wall_ms,est_grad_norm_sq,theta_hash\n", 0) == 0);
  std::istringstream in(text);
  const IterateLog back = read_iterate_csv(in);
  REQUIRE(back.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(back.records[i].surrogate == res.log.records[i].surrogate);
    CHECK(back.records[i].backups == res.log.records[i].backups);
    CHECK(back.records[i].theta_hash == res.log.records[i].theta_hash);
    CHECK(back.records[i].wall_ms.has_value());
  }
  CHECK(csv_of(back) == text);

  std::istringstream empty;
  CHECK_THROWS_AS(read_iterate_csv(empty), IoError);
  std::istringstream bad_header("a,b,c\n1,2,3\n");
  CHECK_THROWS_AS(read_iterate_csv(bad_header), IoError);
  std::istringstream bad_row("k,L_hat,grad_norm_sq,policy_gap,backups,wall_ms,est_grad_norm_sq,theta_hash\n0,x,1,1,1,,1,ab\n");
  CHECK_THROWS_AS(read_iterate_csv(bad_row), IoError);
}

TEST_CASE("format_double and hash_vector") {
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(std::stod(format_double(0.1)) == 0.1);
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  VectorD v(2);
  v << 1.0, 2.0;
  CHECK(hash_vector(v).size() == 16);
  CHECK(hash_vector(v) == hash_vector(VectorD(v)));
  v[1] = std::nextafter(2.0, 3.0);
  CHECK(hash_vector(v) != hash_vector(VectorD::LinSpaced(2, 1.0, 2.0)));
  CHECK(hash_vector(VectorD()) == "cbf29ce484222325");
}

TEST_CASE("result JSON carries theta, policy and extras") {
  const auto sc = test::random_instance(12);
  const PolicyD expert = test::optimal_policy(sc);
  const auto res = run_ml_irl(sc.mdp, sc.features, Dataset{}, exact_cfg(3), &expert);
  std::ostringstream os;
  write_result_json(os, res, {{"scenario", "random"}});
  const auto j = nlohmann::json::parse(os.str());
  CHECK(j["scenario"] == "random");
  CHECK(j["algorithm"] == "ml-irl-exact");
  CHECK(j["theta"].size() == 4);
  CHECK(j["policy"].size() == 5);
  CHECK(j["iterations"] == 3);
}
