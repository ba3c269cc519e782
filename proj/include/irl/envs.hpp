#pragma once

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "irl/mdp.hpp"
#include "irl/reward.hpp"

namespace irl {

/// A built testbed: dynamics, feature map and the ground-truth parameter.
struct Scenario {
  std::string name;
  Mdp mdp;
  FeatureMap features;
  RewardParams theta_star;
  // Grid shape for heatmaps of state rewards (rows, cols), when states form a grid.
  std::optional<std::array<Eigen::Index, 2>> grid;
};

enum GridAction : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kStay = 4 };

struct GridWorldSpec {
  int width = 5;
  int height = 5;
  double slip_prob = 0.1;  // probability of a uniformly random *other* move
  TableD reward_grid;      // [row][col]; empty means goal corner (bottom-right) = 1, else 0
  double gamma = 0.9;
  std::optional<std::array<int, 2>> start_cell;  // (row, col); empty = uniform random start

  static GridWorldSpec standard();
};

struct MountainCarSpec {
  int n_position_bins = 20;
  int n_velocity_bins = 20;
  double gamma = 0.95;
  double goal_reward = 1.0;
  double step_penalty = 0.01;
  int frame_skip = 0;  // simulator steps per action; 0 picks roughly one velocity bin per action
};

struct RandomMdpSpec {
  int n_states = 6;
  int n_actions = 4;
  int p_features = 4;
  double gamma = 0.9;
  double sparsity = 0.0;  // fraction of next-state entries zeroed per row
  std::uint64_t seed = 0;
};

/// States are cells in row-major order (state = row * width + col, origin top-left).
/// Features are one-hot per state; theta* is the flattened reward grid.
Scenario build_gridworld(const GridWorldSpec& spec);

/// Standard mountain-car physics on cell centers, snapped to the nearest cell.
/// Goal cells (position >= 0.5) are absorbing. State = pos_bin * n_velocity_bins + vel_bin.
Scenario build_mountain_car(const MountainCarSpec& spec);

/// Dirichlet(1) transition rows with an optional fraction of zeroed entries,
/// features uniform on [-1, 1], theta* uniform on [-1, 1].
Scenario build_random_mdp(int n_states, int n_actions, int p_features, double gamma,
                          double sparsity, std::uint64_t seed);
Scenario build_random_mdp(const RandomMdpSpec& spec);

using ScenarioSpec = std::variant<GridWorldSpec, MountainCarSpec, RandomMdpSpec>;

/// Reads {"scenario": "gridworld" | "mountain_car" | "random", "<kind>": {...}}.
ScenarioSpec scenario_spec_from_json(const nlohmann::json& j);
nlohmann::json scenario_spec_to_json(const ScenarioSpec& spec);
Scenario build_scenario(const ScenarioSpec& spec);

}  // namespace irl
