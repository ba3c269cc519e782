#include <doctest.h>

#include <nlohmann/json.hpp>

#include "irl/errors.hpp"
#include "irl/reward.hpp"
#include "support.hpp"

using namespace irl;

TEST_CASE("one-hot tabular reward reproduces theta") {
  const auto fm = FeatureMap::one_hot_tabular(3, 2);
  VectorD theta(6);
  theta << 1, 2, 3, 4, 5, 6;
  const Rewards r = reward_table(fm, theta);
  for (Eigen::Index s = 0; s < 3; ++s) {
    for (Eigen::Index a = 0; a < 2; ++a) CHECK(r.values(s, a) == theta[s * 2 + a]);
  }
  CHECK(reward_table(fm, VectorD(VectorD::Zero(6))).values.isZero());
}

TEST_CASE("dot-product reward and the bound flag") {
  // Features [1, s] per state.
  Matrix<double> phi(5, 2);
  for (int s = 0; s < 5; ++s) phi.row(s) << 1.0, s;
  const FeatureMap fm(5, 1, phi, FeatureKind::kStateAction);
  VectorD theta(2);
  theta << 1, 2;
  const Rewards r = reward_table(fm, theta);
  CHECK(r.values(3, 0) == 7.0);
  CHECK_FALSE(r.within_bound);
  CHECK(reward_table(fm, theta, 9.0).within_bound);
  CHECK_THROWS_AS(reward_table(fm, VectorD(VectorD::Zero(3))), ShapeError);
}

TEST_CASE("reward_gradient returns feature rows") {
  const auto fm = FeatureMap::one_hot_tabular(3, 2);
  const VectorD g = reward_gradient(fm, 2, 1);
  CHECK(g.size() == 6);
  CHECK(g[5] == 1.0);
  CHECK(g.sum() == 1.0);

  const auto so = FeatureMap::one_hot_state(4, 3);
  CHECK(so.state_only());
  for (Eigen::Index s = 0; s < 4; ++s) {
    for (Eigen::Index a = 1; a < 3; ++a) CHECK(reward_gradient(so, s, a) == reward_gradient(so, s, 0));
  }
  CHECK_THROWS_AS(reward_gradient(fm, 3, 0), std::out_of_range);
  CHECK_THROWS_AS(reward_gradient(fm, 0, -1), std::out_of_range);
}

TEST_CASE("reward_gradient agrees with central differences of reward_table") {
  const auto sc = test::random_instance(4, 5, 3, 6);
  Rng rng(4);
  const VectorD theta = test::random_vector(rng, 6, 1.0);
  const double h = 1e-5;
  for (Eigen::Index s = 0; s < 5; ++s) {
    for (Eigen::Index a = 0; a < 3; ++a) {
      const VectorD g = reward_gradient(sc.features, s, a);
      for (Eigen::Index i = 0; i < 6; ++i) {
        VectorD tp = theta, tm = theta;
        tp[i] += h;
        tm[i] -= h;
        const double fd = (reward_table(sc.features, tp).values(s, a) - reward_table(sc.features, tm).values(s, a)) / (2 * h);
        CHECK(std::abs(fd - g[i]) <= 1e-8);
      }
    }
  }
}

TEST_CASE("reward_table is linear in theta") {
  Rng rng(21);
  for (int i = 0; i < 50; ++i) {
    const auto sc = test::random_instance(500 + i, 4, 3, 5);
    const VectorD t1 = test::random_vector(rng, 5, 3.0), t2 = test::random_vector(rng, 5, 3.0);
    const double al = 4 * rng.uniform() - 2, be = 4 * rng.uniform() - 2;
    const TableD lhs = reward_table(sc.features, VectorD(al * t1 + be * t2)).values;
    const TableD rhs = al * reward_table(sc.features, t1).values + be * reward_table(sc.features, t2).values;
    CHECK(test::sup_norm(lhs, rhs) <= 1e-12);
  }
}

TEST_CASE("state-only maps give action-constant rewards") {
  Rng rng(2);
  const auto fm = FeatureMap::one_hot_state(6, 4);
  const TableD r = reward_table(fm, test::random_vector(rng, 6, 1.0)).values;
  for (Eigen::Index s = 0; s < 6; ++s) CHECK((r.row(s).array() == r(s, 0)).all());
}

TEST_CASE("feature map invariants are enforced") {
  Matrix<double> phi(4, 2);
  phi << 1, 0, 0, 1, 1, 0, 1, 0;
  // State 0 rows differ, so a state-only declaration is rejected.
  CHECK_THROWS_AS(FeatureMap(2, 2, phi, FeatureKind::kStateOnly), ShapeError);
  CHECK_NOTHROW(FeatureMap(2, 2, phi, FeatureKind::kStateAction));
  Matrix<double> not_unit = Matrix<double>::Identity(4, 4);
  not_unit(2, 2) = 2.0;
  CHECK_THROWS_AS(FeatureMap(2, 2, not_unit, FeatureKind::kOneHotTabular), ShapeError);
  CHECK_THROWS_AS(FeatureMap(2, 2, Matrix<double>::Zero(3, 2), FeatureKind::kStateAction), ShapeError);
  CHECK_THROWS_AS(feature_kind_from_string("neural"), ConfigError);
}

TEST_CASE("feature map JSON round trip and scaling") {
  const auto sc = test::random_instance(6, 4, 3, 3);
  nlohmann::json j = sc.features;
  const FeatureMap back = j.get<FeatureMap>();
  CHECK(back.phi() == sc.features.phi());
  CHECK(back.kind() == sc.features.kind());
  CHECK(back.n_actions() == 3);
  CHECK(sc.features.scaled(3.0).max_norm() == doctest::Approx(3.0 * sc.features.max_norm()));

  j["values"].erase(0);
  CHECK_THROWS_AS(j.get<FeatureMap>(), ShapeError);
}

TEST_CASE("anchor_rewards zeroes the reference action") {
  TableD r(2, 3);
  r << 1, 2, 3, -1, 0, 4;
  const TableD a = anchor_rewards(r, 1);
  CHECK(a.col(1).isZero());
  CHECK(a(0, 2) == 1.0);
  CHECK(a(1, 0) == -1.0);
  CHECK_THROWS_AS(anchor_rewards(r, 3), std::out_of_range);
}
