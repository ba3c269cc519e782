#include "irl/envs.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

#include "irl/rollout.hpp"

namespace irl {

GridWorldSpec GridWorldSpec::standard() { return GridWorldSpec{}; }

namespace {

std::array<int, 2> move(int row, int col, int action, int height, int width) {
  switch (action) {
    case kUp: row -= 1; break;
    case kDown: row += 1; break;
    case kLeft: col -= 1; break;
    case kRight: col += 1; break;
    default: break;
  }
  // Bumping into a wall leaves the agent where it was.
  return {std::clamp(row, 0, height - 1), std::clamp(col, 0, width - 1)};
}

}  // namespace

Scenario build_gridworld(const GridWorldSpec& spec) {
  if (spec.width < 2 || spec.height < 2) throw ConfigError("gridworld: width and height must be >= 2");
  if (!(spec.slip_prob >= 0.0 && spec.slip_prob < 1.0)) {
    throw ConfigError("gridworld: slip_prob must lie in [0, 1)");
  }
  TableD grid = spec.reward_grid;
  if (grid.size() == 0) {
    grid = TableD::Zero(spec.height, spec.width);
    grid(spec.height - 1, spec.width - 1) = 1.0;
  }
  if (grid.rows() != spec.height || grid.cols() != spec.width) {
    throw ConfigError("gridworld: reward_grid must be height x width");
  }
  if (!grid.allFinite()) throw ConfigError("gridworld: reward_grid must be finite");

  const int n_states = spec.width * spec.height;
  constexpr int n_actions = 5;
  Scenario sc;
  sc.name = "gridworld";
  sc.mdp.n_states = n_states;
  sc.mdp.n_actions = n_actions;
  sc.mdp.gamma = spec.gamma;
  sc.mdp.transition = Matrix<double>::Zero(n_states * n_actions, n_states);
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      const int s = r * spec.width + c;
      for (int a = 0; a < n_actions; ++a) {
        for (int actual = 0; actual < n_actions; ++actual) {
          const double p = actual == a ? 1.0 - spec.slip_prob : spec.slip_prob / (n_actions - 1);
          if (p == 0.0) continue;
          const auto [nr, nc] = move(r, c, actual, spec.height, spec.width);
          sc.mdp.transition(s * n_actions + a, nr * spec.width + nc) += p;
        }
      }
    }
  }
  if (spec.start_cell) {
    const auto [r, c] = *spec.start_cell;
    if (r < 0 || r >= spec.height || c < 0 || c >= spec.width) {
      throw ConfigError("gridworld: start cell outside the grid");
    }
    sc.mdp.rho = VectorD::Zero(n_states);
    sc.mdp.rho(r * spec.width + c) = 1.0;
  } else {
    sc.mdp.rho = VectorD::Constant(n_states, 1.0 / n_states);
  }
  validate_mdp(sc.mdp);
  sc.features = FeatureMap::one_hot_state(n_states, n_actions);
  sc.theta_star.theta = grid.reshaped<Eigen::RowMajor>();
  sc.grid = std::array<Eigen::Index, 2>{spec.height, spec.width};
  return sc;
}

Scenario build_mountain_car(const MountainCarSpec& spec) {
  if (spec.n_position_bins < 4 || spec.n_velocity_bins < 4) {
    throw ConfigError("mountain_car: need at least 4 bins per dimension");
  }
  constexpr double kMinPos = -1.2, kMaxPos = 0.6, kMaxSpeed = 0.07, kGoal = 0.5;
  constexpr double kForce = 0.001, kGravity = 0.0025;
  const int np = spec.n_position_bins, nv = spec.n_velocity_bins;
  const double dx = (kMaxPos - kMinPos) / np;
  const double dv = 2.0 * kMaxSpeed / nv;
  const int skip = spec.frame_skip > 0 ? spec.frame_skip
                                       : std::max(1, static_cast<int>(std::lround(dv / kForce)));

  auto pos_center = [&](int i) { return kMinPos + (i + 0.5) * dx; };
  auto vel_center = [&](int j) { return -kMaxSpeed + (j + 0.5) * dv; };
  auto pos_bin = [&](double x) { return std::clamp(static_cast<int>(std::floor((x - kMinPos) / dx)), 0, np - 1); };
  auto vel_bin = [&](double v) { return std::clamp(static_cast<int>(std::floor((v + kMaxSpeed) / dv)), 0, nv - 1); };

  const int n_states = np * nv;
  constexpr int n_actions = 3;  // reverse, coast, forward
  Scenario sc;
  sc.name = "mountain_car";
  sc.mdp.n_states = n_states;
  sc.mdp.n_actions = n_actions;
  sc.mdp.gamma = spec.gamma;
  sc.mdp.transition = Matrix<double>::Zero(n_states * n_actions, n_states);
  VectorD theta(n_states);
  for (int i = 0; i < np; ++i) {
    for (int j = 0; j < nv; ++j) {
      const int s = i * nv + j;
      const bool goal = pos_center(i) >= kGoal;
      theta(s) = goal ? spec.goal_reward : -spec.step_penalty;
      for (int a = 0; a < n_actions; ++a) {
        int next = s;
        if (!goal) {
          double x = pos_center(i), v = vel_center(j);
          for (int k = 0; k < skip; ++k) {
            v = std::clamp(v + (a - 1) * kForce - kGravity * std::cos(3.0 * x), -kMaxSpeed, kMaxSpeed);
            x = std::clamp(x + v, kMinPos, kMaxPos);
            if (x == kMinPos && v < 0.0) v = 0.0;
            if (x >= kGoal) break;
          }
          next = pos_bin(x) * nv + vel_bin(v);
        }
        sc.mdp.transition(s * n_actions + a, next) = 1.0;
      }
    }
  }
  // Standard start: position uniform in [-0.6, -0.4], zero velocity.
  sc.mdp.rho = VectorD::Zero(n_states);
  const int j0 = vel_bin(0.0);
  for (int i = 0; i < np; ++i) {
    const double x = pos_center(i);
    if (x >= -0.6 - 0.5 * dx && x <= -0.4 + 0.5 * dx) sc.mdp.rho(i * nv + j0) = 1.0;
  }
  if (sc.mdp.rho.sum() == 0.0) sc.mdp.rho(pos_bin(-0.5) * nv + j0) = 1.0;
  sc.mdp.rho /= sc.mdp.rho.sum();
  validate_mdp(sc.mdp);
  sc.features = FeatureMap::one_hot_state(n_states, n_actions);
  sc.theta_star.theta = theta;
  sc.grid = std::array<Eigen::Index, 2>{np, nv};
  return sc;
}

Scenario build_random_mdp(int n_states, int n_actions, int p_features, double gamma,
                          double sparsity, std::uint64_t seed) {
  if (n_states < 1 || n_actions < 1 || p_features < 0) throw ConfigError("random mdp: bad dimensions");
  if (!(sparsity >= 0.0 && sparsity < 1.0)) throw ConfigError("random mdp: sparsity must lie in [0, 1)");
  Rng rng(seed);
  Scenario sc;
  sc.name = "random";
  sc.mdp.n_states = n_states;
  sc.mdp.n_actions = n_actions;
  sc.mdp.gamma = gamma;
  sc.mdp.transition.resize(n_states * n_actions, n_states);
  const int n_zero = std::min(n_states - 1, static_cast<int>(std::floor(sparsity * n_states)));
  for (Eigen::Index row = 0; row < sc.mdp.transition.rows(); ++row) {
    for (int s = 0; s < n_states; ++s) sc.mdp.transition(row, s) = -std::log(rng.uniform_open());
    for (int k = 0; k < n_zero; ++k) {
      // Zero distinct entries, never the last remaining positive one.
      int idx;
      do {
        idx = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_states)));
      } while (sc.mdp.transition(row, idx) == 0.0);
      sc.mdp.transition(row, idx) = 0.0;
    }
    sc.mdp.transition.row(row) /= sc.mdp.transition.row(row).sum();
  }
  sc.mdp.rho.resize(n_states);
  for (int s = 0; s < n_states; ++s) sc.mdp.rho(s) = -std::log(rng.uniform_open());
  sc.mdp.rho /= sc.mdp.rho.sum();
  validate_mdp(sc.mdp);

  Matrix<double> phi(n_states * n_actions, p_features);
  for (Eigen::Index i = 0; i < phi.rows(); ++i) {
    for (Eigen::Index f = 0; f < phi.cols(); ++f) phi(i, f) = 2.0 * rng.uniform() - 1.0;
  }
  sc.features = FeatureMap(n_states, n_actions, std::move(phi), FeatureKind::kStateAction);
  sc.theta_star.theta.resize(p_features);
  for (int f = 0; f < p_features; ++f) sc.theta_star.theta(f) = 2.0 * rng.uniform() - 1.0;
  return sc;
}

Scenario build_random_mdp(const RandomMdpSpec& spec) {
  return build_random_mdp(spec.n_states, spec.n_actions, spec.p_features, spec.gamma,
                          spec.sparsity, spec.seed);
}

ScenarioSpec scenario_spec_from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("scenario").get<std::string>();
    const nlohmann::json body = j.contains(kind) ? j.at(kind) : nlohmann::json::object();
    if (kind == "gridworld") {
      GridWorldSpec g;
      g.width = body.value("width", g.width);
      g.height = body.value("height", g.height);
      g.slip_prob = body.value("slip_prob", g.slip_prob);
      g.gamma = body.value("gamma", g.gamma);
      if (body.contains("reward_grid")) {
        const auto rows = body.at("reward_grid").get<std::vector<std::vector<double>>>();
        g.reward_grid.resize(static_cast<Eigen::Index>(rows.size()),
                             rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
          if (rows[r].size() != rows.front().size()) throw ConfigError("reward_grid rows differ in length");
          for (std::size_t c = 0; c < rows[r].size(); ++c) {
            g.reward_grid(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
          }
        }
      }
      if (body.contains("start") && body.at("start").is_array()) {
        g.start_cell = body.at("start").get<std::array<int, 2>>();
      }
      return g;
    }
    if (kind == "mountain_car") {
      MountainCarSpec m;
      m.n_position_bins = body.value("n_position_bins", m.n_position_bins);
      m.n_velocity_bins = body.value("n_velocity_bins", m.n_velocity_bins);
      m.gamma = body.value("gamma", m.gamma);
      m.goal_reward = body.value("goal_reward", m.goal_reward);
      m.step_penalty = body.value("step_penalty", m.step_penalty);
      m.frame_skip = body.value("frame_skip", m.frame_skip);
      return m;
    }
    if (kind == "random") {
      RandomMdpSpec r;
      r.n_states = body.value("n_states", r.n_states);
      r.n_actions = body.value("n_actions", r.n_actions);
      r.p_features = body.value("p_features", r.p_features);
      r.gamma = body.value("gamma", r.gamma);
      r.sparsity = body.value("sparsity", r.sparsity);
      r.seed = body.value("seed", r.seed);
      return r;
    }
    throw ConfigError("unknown scenario '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario config: ") + e.what());
  }
}

nlohmann::json scenario_spec_to_json(const ScenarioSpec& spec) {
  return std::visit(
      [](const auto& s) -> nlohmann::json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GridWorldSpec>) {
          nlohmann::json body = {{"width", s.width}, {"height", s.height}, {"slip_prob", s.slip_prob},
                                 {"gamma", s.gamma}};
          if (s.reward_grid.size() > 0) {
            std::vector<std::vector<double>> rows;
            for (Eigen::Index r = 0; r < s.reward_grid.rows(); ++r) {
              rows.emplace_back(s.reward_grid.row(r).begin(), s.reward_grid.row(r).end());
            }
            body["reward_grid"] = rows;
          }
          body["start"] = s.start_cell ? nlohmann::json(*s.start_cell) : nlohmann::json("uniform");
          return {{"scenario", "gridworld"}, {"gridworld", body}};
        } else if constexpr (std::is_same_v<T, MountainCarSpec>) {
          return {{"scenario", "mountain_car"},
                  {"mountain_car",
                   {{"n_position_bins", s.n_position_bins}, {"n_velocity_bins", s.n_velocity_bins},
                    {"gamma", s.gamma}, {"goal_reward", s.goal_reward},
                    {"step_penalty", s.step_penalty}, {"frame_skip", s.frame_skip}}}};
        } else {
          return {{"scenario", "random"},
                  {"random",
                   {{"n_states", s.n_states}, {"n_actions", s.n_actions}, {"p_features", s.p_features},
                    {"gamma", s.gamma}, {"sparsity", s.sparsity}, {"seed", s.seed}}}};
        }
      },
      spec);
}

Scenario build_scenario(const ScenarioSpec& spec) {
  return std::visit(
      [](const auto& s) -> Scenario {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GridWorldSpec>) {
          return build_gridworld(s);
        } else if constexpr (std::is_same_v<T, MountainCarSpec>) {
          return build_mountain_car(s);
        } else {
          return build_random_mdp(s);
        }
      },
      spec);
}

}  // namespace irl
