#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "irl/mdp.hpp"
#include "irl/reward.hpp"

namespace irl {

// Counter-based seed derivation: a pure function of (master, stream, index), so
// work split across threads reproduces the sequential result exactly.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

/// Seeded generator plus the two primitive draws every sampler needs. Draws are
/// computed from the raw 64-bit stream so they do not depend on the standard
/// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on (0, 1).
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }
  std::uint64_t below(std::uint64_t n);

  template <typename Derived>
  Eigen::Index categorical(const Eigen::DenseBase<Derived>& probs) {
    const double u = uniform();
    double acc = 0.0;
    const Eigen::Index n = probs.size();
    for (Eigen::Index i = 0; i < n; ++i) {
      acc += probs(i);
      if (u < acc) return i;
    }
    // Rounding left a sliver above the cumulative sum: take the last positive entry.
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      if (probs(i) > 0) return i;
    }
    return n - 1;
  }

 private:
  std::mt19937_64 engine_;
};

struct Trajectory {
  std::vector<std::pair<int, int>> steps;  // (state, action)
  std::optional<int> next_state;           // successor of the last step, when recorded
  int horizon = 0;

  std::size_t size() const { return steps.size(); }
};

struct Dataset {
  std::vector<Trajectory> trajectories;
  std::uint64_t seed = 0;
  int horizon = 0;
  std::string source;  // id of the generating policy
  Eigen::Index n_states = 0;
  Eigen::Index n_actions = 0;

  std::size_t size() const { return trajectories.size(); }
};

/// Smallest H with gamma^H <= tail * (1 - gamma), so truncated discounted sums
/// of unit-bounded terms are within `tail` of the infinite sum.
int default_horizon(double gamma, double tail = 1e-8);

Trajectory sample_trajectory(const Mdp& mdp, const PolicyD& policy, int horizon,
                             std::uint64_t seed);

Dataset make_expert_dataset(const Mdp& mdp, const PolicyD& expert, int n_traj, int horizon,
                            std::uint64_t seed, std::string source = "expert", int threads = 1);

/// h(tau) = sum_{t<H} gamma^t phi(s_t, a_t).
VectorD discounted_grad_sum(const FeatureMap& fm, const Trajectory& traj, double gamma);

/// Mean of discounted_grad_sum over the dataset.
VectorD empirical_feature_expectation(const FeatureMap& fm, const Dataset& data, double gamma);

/// (1 - gamma) * mean_tau sum_t gamma^t 1[(s_t, a_t) = (s, a)].
TableD empirical_occupancy(const Dataset& data, Eigen::Index n_states, Eigen::Index n_actions,
                           double gamma);

/// Empirical distribution of first states.
VectorD empirical_initial_distribution(const Dataset& data, Eigen::Index n_states);

/// Throws std::invalid_argument if any index falls outside the given sizes.
void validate_dataset(const Dataset& data, Eigen::Index n_states, Eigen::Index n_actions);

// JSON-lines: a header object on the first line, then one trajectory per line:
//   {"header": {"n_traj": N, "horizon": H, "seed": S, "source": "...",
//               "n_states": .., "n_actions": ..}}
//   {"steps": [[s0, a0], [s1, a1], ...], "next_state": sH}
void write_dataset(std::ostream& os, const Dataset& data);
Dataset read_dataset(std::istream& is);
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

}  // namespace irl
