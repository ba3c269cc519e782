#include <doctest.h>

#include <sstream>

#include "irl/errors.hpp"
#include "irl/likelihood.hpp"
#include "irl/rollout.hpp"
#include "support.hpp"

using namespace irl;

namespace {

bool same(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size() || a.seed != b.seed || a.horizon != b.horizon) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.trajectories[i].steps != b.trajectories[i].steps) return false;
    if (a.trajectories[i].next_state != b.trajectories[i].next_state) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("derive_seed is a pure function with distinct streams") {
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 2, 4));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(2, 2, 3));
}

TEST_CASE("default_horizon bounds the truncation tail") {
  for (double g : {0.5, 0.9, 0.95, 0.99}) {
    const int h = default_horizon(g);
    CHECK(std::pow(g, h) <= 1e-8 * (1 - g) * (1 + 1e-12));
    CHECK(std::pow(g, h - 1) > 1e-8 * (1 - g));
  }
  CHECK(default_horizon(0.0) == 1);
}

TEST_CASE("sample_trajectory on a one-state MDP") {
  const Mdp m = test::one_state(3, 0.9);
  PolicyD pi;
  pi.pi.resize(1, 3);
  pi.pi << 0.2, 0.3, 0.5;
  const auto tr = sample_trajectory(m, pi, 50, 9);
  CHECK(tr.size() == 50);
  for (const auto& [s, a] : tr.steps) {
    CHECK(s == 0);
    CHECK((a >= 0 && a < 3));
  }
  CHECK(tr.next_state == 0);
  CHECK_THROWS_AS(sample_trajectory(m, pi, 0, 9), std::invalid_argument);
}

TEST_CASE("deterministic policy and kernel give the unique rollout") {
  // Chain 0 -> 1 -> 2 -> 0 under action 1; action 0 stays.
  Mdp m;
  m.n_states = 3;
  m.n_actions = 2;
  m.transition = Matrix<double>::Zero(6, 3);
  for (int s = 0; s < 3; ++s) {
    m.transition(s * 2 + 0, s) = 1.0;
    m.transition(s * 2 + 1, (s + 1) % 3) = 1.0;
  }
  m.gamma = 0.9;
  m.rho = VectorD::Zero(3);
  m.rho[1] = 1.0;
  validate_mdp(m);
  PolicyD pi;
  pi.pi = TableD::Zero(3, 2);
  pi.pi.col(1).setOnes();
  const auto tr = sample_trajectory(m, pi, 5, 123);
  const std::vector<std::pair<int, int>> want = {{1, 1}, {2, 1}, {0, 1}, {1, 1}, {2, 1}};
  CHECK(tr.steps == want);
  CHECK(tr.next_state == 0);
}

TEST_CASE("action frequencies at a recurring state match the policy row") {
  const Mdp m = test::one_state(3, 0.9);
  PolicyD pi;
  pi.pi.resize(1, 3);
  pi.pi << 0.1, 0.6, 0.3;
  const int n = 100000;
  const auto tr = sample_trajectory(m, pi, n, 77);
  std::array<double, 3> counts{};
  for (const auto& [s, a] : tr.steps) counts[static_cast<std::size_t>(a)] += 1.0;
  for (int a = 0; a < 3; ++a) {
    const double p = pi.pi(0, a);
    CHECK(std::abs(counts[static_cast<std::size_t>(a)] / n - p) <= 3 * std::sqrt(p * (1 - p) / n));
  }
}

TEST_CASE("make_expert_dataset size, determinism and thread independence") {
  const auto sc = build_gridworld(GridWorldSpec::standard());
  const PolicyD expert = test::optimal_policy(sc);
  const int h = default_horizon(sc.mdp.gamma);
  const auto a = make_expert_dataset(sc.mdp, expert, 30, h, 5);
  CHECK(a.size() == 30);
  for (const auto& tr : a.trajectories) CHECK(tr.size() == static_cast<std::size_t>(h));
  CHECK(make_expert_dataset(sc.mdp, expert, 5, h, 5).size() == 5);
  CHECK(same(a, make_expert_dataset(sc.mdp, expert, 30, h, 5)));
  CHECK(same(a, make_expert_dataset(sc.mdp, expert, 30, h, 5, "expert", 4)));
  CHECK_FALSE(same(a, make_expert_dataset(sc.mdp, expert, 30, h, 6)));
  CHECK_NOTHROW(validate_dataset(a, sc.mdp.n_states, sc.mdp.n_actions));
  CHECK_THROWS_AS(validate_dataset(a, 3, 5), std::invalid_argument);
  CHECK_THROWS_AS(make_expert_dataset(sc.mdp, expert, 0, h, 5), std::invalid_argument);
}

TEST_CASE("discounted_grad_sum small cases") {
  const auto fm = FeatureMap::one_hot_tabular(2, 2);
  Trajectory tr;
  tr.steps = {{0, 1}, {0, 1}};
  const VectorD h = discounted_grad_sum(fm, tr, 0.5);
  CHECK(h[1] == 1.5);
  CHECK(h.sum() == 1.5);

  tr.steps = {{1, 0}, {0, 0}, {0, 1}};
  CHECK(discounted_grad_sum(fm, tr, 0.0) == reward_gradient(fm, 1, 0));

  // Constant features: c (1 - gamma^H) / (1 - gamma).
  Matrix<double> phi = Matrix<double>::Constant(4, 2, 0.0);
  phi.col(0).setConstant(0.7);
  phi.col(1).setConstant(-1.3);
  const FeatureMap cf(2, 2, phi, FeatureKind::kStateAction);
  Trajectory long_tr;
  const int H = 40;
  for (int t = 0; t < H; ++t) long_tr.steps.emplace_back(t % 2, (t / 2) % 2);
  const double g = 0.9, geo = (1 - std::pow(g, H)) / (1 - g);
  const VectorD hc = discounted_grad_sum(cf, long_tr, g);
  CHECK(hc[0] == doctest::Approx(0.7 * geo).epsilon(1e-13));
  CHECK(hc[1] == doctest::Approx(-1.3 * geo).epsilon(1e-13));
}

TEST_CASE("truncation error is bounded by gamma^H / (1 - gamma)") {
  const auto sc = test::random_instance(3, 4, 2, 2, 0.9);
  const auto fm = FeatureMap::one_hot_tabular(4, 2);
  Rng rng(3);
  const PolicyD pi = test::random_policy(rng, 4, 2);
  const auto longer = sample_trajectory(sc.mdp, pi, 400, 8);
  for (int H : {5, 20, 60}) {
    Trajectory cut = longer;
    cut.steps.resize(static_cast<std::size_t>(H));
    const double err = (discounted_grad_sum(fm, cut, 0.9) - discounted_grad_sum(fm, longer, 0.9)).cwiseAbs().maxCoeff();
    CHECK(err <= std::pow(0.9, H) / (1 - 0.9));
  }
}

TEST_CASE("empirical_feature_expectation mean properties") {
  const auto sc = test::random_instance(12);
  const PolicyD pi = test::optimal_policy(sc);
  const auto data = make_expert_dataset(sc.mdp, pi, 7, 30, 1);
  Dataset one = data;
  one.trajectories.resize(1);
  CHECK(empirical_feature_expectation(sc.features, one, 0.9) ==
        discounted_grad_sum(sc.features, data.trajectories[0], 0.9));
  Dataset twice = data;
  twice.trajectories.insert(twice.trajectories.end(), data.trajectories.begin(), data.trajectories.end());
  CHECK((empirical_feature_expectation(sc.features, twice, 0.9) - empirical_feature_expectation(sc.features, data, 0.9))
            .cwiseAbs()
            .maxCoeff() <= 1e-14);
  CHECK_THROWS_AS(empirical_feature_expectation(sc.features, Dataset{}, 0.9), std::invalid_argument);
}

TEST_CASE("empirical features approach the occupancy features") {
  const auto sc = test::random_instance(13, 5, 3, 3, 0.8);
  const PolicyD pi = test::optimal_policy(sc);
  const int n = 4000;
  const int H = default_horizon(0.8);
  const auto data = make_expert_dataset(sc.mdp, pi, n, H, 2);
  const VectorD exact = model_feature_expectation(sc.mdp, sc.features, pi);
  const VectorD mean = empirical_feature_expectation(sc.features, data, 0.8);
  // Per-coordinate standard error from the sample itself.
  for (Eigen::Index i = 0; i < 3; ++i) {
    double var = 0.0;
    for (const auto& tr : data.trajectories) {
      const double x = discounted_grad_sum(sc.features, tr, 0.8)[i] - mean[i];
      var += x * x;
    }
    const double se = std::sqrt(var / (n - 1) / n);
    CHECK(std::abs(mean[i] - exact[i]) <= 3 * se + 1e-6);
  }
  CHECK(std::abs(empirical_occupancy(data, 5, 3, 0.8).sum() - 1.0) <= 1e-6);
}

TEST_CASE("dataset JSON-lines round trip") {
  const auto sc = test::random_instance(14);
  const auto data = make_expert_dataset(sc.mdp, test::optimal_policy(sc), 4, 12, 99, "unit");
  std::stringstream ss;
  write_dataset(ss, data);
  const std::string text = ss.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);  // header + one line per trajectory
  const Dataset back = read_dataset(ss);
  CHECK(same(data, back));
  CHECK(back.source == "unit");
  CHECK(back.n_states == 5);
  std::stringstream again;
  write_dataset(again, back);
  CHECK(again.str() == text);
}

TEST_CASE("dataset reader rejects malformed input") {
  std::stringstream empty;
  CHECK_THROWS_AS(read_dataset(empty), IoError);
  std::stringstream no_traj("{\"header\":{\"horizon\":3,\"seed\":0}}\n");
  CHECK_THROWS_AS(read_dataset(no_traj), IoError);
  std::stringstream too_long("{\"header\":{\"horizon\":1,\"seed\":0}}\n{\"steps\":[[0,0],[0,1]]}\n");
  CHECK_THROWS_AS(read_dataset(too_long), IoError);
  std::stringstream junk("{\"header\":{\"horizon\":1,\"seed\":0}}\nnot json\n");
  CHECK_THROWS_AS(read_dataset(junk), IoError);
  CHECK_THROWS_AS(load_dataset("/nonexistent/dataset.jsonl"), IoError);
}
