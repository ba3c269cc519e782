#include "irl/rollout.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

namespace irl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: empty range");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

int default_horizon(double gamma, double tail) {
  if (gamma <= 0.0) return 1;
  if (!(gamma < 1.0)) throw std::invalid_argument("default_horizon: discount must be < 1");
  const double h = std::log(tail * (1.0 - gamma)) / std::log(gamma);
  return std::max(1, static_cast<int>(std::ceil(h)));
}

Trajectory sample_trajectory(const Mdp& mdp, const PolicyD& policy, int horizon,
                             std::uint64_t seed) {
  if (horizon < 1) throw std::invalid_argument("sample_trajectory: horizon must be >= 1");
  Rng rng(seed);
  Trajectory traj;
  traj.horizon = horizon;
  traj.steps.reserve(static_cast<std::size_t>(horizon));
  auto s = rng.categorical(mdp.rho);
  for (int t = 0; t < horizon; ++t) {
    const auto a = rng.categorical(policy.pi.row(s));
    traj.steps.emplace_back(static_cast<int>(s), static_cast<int>(a));
    s = rng.categorical(mdp.next_state_dist(s, a));
  }
  traj.next_state = static_cast<int>(s);
  return traj;
}

Dataset make_expert_dataset(const Mdp& mdp, const PolicyD& expert, int n_traj, int horizon,
                            std::uint64_t seed, std::string source, int threads) {
  if (n_traj < 1) throw std::invalid_argument("make_expert_dataset: n_traj must be >= 1");
  Dataset data;
  data.seed = seed;
  data.horizon = horizon;
  data.source = std::move(source);
  data.n_states = mdp.n_states;
  data.n_actions = mdp.n_actions;
  data.trajectories.resize(static_cast<std::size_t>(n_traj));

  auto fill = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      data.trajectories[static_cast<std::size_t>(i)] =
          sample_trajectory(mdp, expert, horizon, derive_seed(seed, 0, static_cast<std::uint64_t>(i)));
    }
  };
  threads = std::max(1, std::min(threads, n_traj));
  if (threads == 1) {
    fill(0, n_traj);
  } else {
    std::vector<std::future<void>> jobs;
    const int chunk = (n_traj + threads - 1) / threads;
    for (int b = 0; b < n_traj; b += chunk) {
      jobs.push_back(std::async(std::launch::async, fill, b, std::min(n_traj, b + chunk)));
    }
    for (auto& j : jobs) j.get();
  }
  return data;
}

VectorD discounted_grad_sum(const FeatureMap& fm, const Trajectory& traj, double gamma) {
  VectorD h = VectorD::Zero(fm.dim());
  double w = 1.0;
  for (const auto& [s, a] : traj.steps) {
    h += w * fm.row(s, a).transpose();
    w *= gamma;
  }
  return h;
}

VectorD empirical_feature_expectation(const FeatureMap& fm, const Dataset& data, double gamma) {
  if (data.trajectories.empty()) throw std::invalid_argument("empty dataset");
  VectorD sum = VectorD::Zero(fm.dim());
  for (const auto& tr : data.trajectories) sum += discounted_grad_sum(fm, tr, gamma);
  return sum / static_cast<double>(data.size());
}

TableD empirical_occupancy(const Dataset& data, Eigen::Index n_states, Eigen::Index n_actions,
                           double gamma) {
  if (data.trajectories.empty()) throw std::invalid_argument("empty dataset");
  TableD d = TableD::Zero(n_states, n_actions);
  for (const auto& tr : data.trajectories) {
    double w = 1.0;
    for (const auto& [s, a] : tr.steps) {
      d(s, a) += w;
      w *= gamma;
    }
  }
  return d * ((1.0 - gamma) / static_cast<double>(data.size()));
}

VectorD empirical_initial_distribution(const Dataset& data, Eigen::Index n_states) {
  if (data.trajectories.empty()) throw std::invalid_argument("empty dataset");
  VectorD rho = VectorD::Zero(n_states);
  for (const auto& tr : data.trajectories) rho(tr.steps.front().first) += 1.0;
  return rho / static_cast<double>(data.size());
}

void validate_dataset(const Dataset& data, Eigen::Index n_states, Eigen::Index n_actions) {
  if (data.trajectories.empty()) throw std::invalid_argument("dataset is empty");
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& tr = data.trajectories[i];
    auto bad = [&](int s) { return s < 0 || s >= n_states; };
    for (const auto& [s, a] : tr.steps) {
      if (bad(s) || a < 0 || a >= n_actions) {
        throw std::invalid_argument("dataset: trajectory " + std::to_string(i) +
                                    " has a state or action outside the MDP");
      }
    }
    if (tr.next_state && bad(*tr.next_state)) {
      throw std::invalid_argument("dataset: trajectory " + std::to_string(i) +
                                  " has an invalid successor state");
    }
  }
}

void write_dataset(std::ostream& os, const Dataset& data) {
  nlohmann::json header = {{"header",
                            {{"n_traj", data.size()},
                             {"horizon", data.horizon},
                             {"seed", data.seed},
                             {"source", data.source},
                             {"n_states", data.n_states},
                             {"n_actions", data.n_actions}}}};
  os << header.dump() << '\n';
  for (const auto& tr : data.trajectories) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& [s, a] : tr.steps) steps.push_back({s, a});
    nlohmann::json line = {{"steps", steps}};
    if (tr.next_state) line["next_state"] = *tr.next_state;
    os << line.dump() << '\n';
  }
}

Dataset read_dataset(std::istream& is) {
  Dataset data;
  std::string line;
  if (!std::getline(is, line)) throw IoError("dataset: missing header line");
  try {
    const auto header = nlohmann::json::parse(line).at("header");
    data.horizon = header.at("horizon").get<int>();
    data.seed = header.at("seed").get<std::uint64_t>();
    data.source = header.value("source", std::string{});
    data.n_states = header.value("n_states", Eigen::Index{0});
    data.n_actions = header.value("n_actions", Eigen::Index{0});
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      Trajectory tr;
      tr.horizon = data.horizon;
      for (const auto& step : j.at("steps")) {
        tr.steps.emplace_back(step.at(0).get<int>(), step.at(1).get<int>());
      }
      if (j.contains("next_state")) tr.next_state = j.at("next_state").get<int>();
      if (tr.steps.empty() || static_cast<int>(tr.steps.size()) > data.horizon) {
        throw IoError("dataset: trajectory length outside (0, horizon]");
      }
      data.trajectories.push_back(std::move(tr));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("dataset: malformed JSON line: ") + e.what());
  }
  if (data.trajectories.empty()) throw IoError("dataset: no trajectories");
  return data;
}

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_dataset(os, data);
  if (!os) throw IoError("write to '" + path + "' failed");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open dataset '" + path + "'");
  return read_dataset(is);
}

}  // namespace irl
