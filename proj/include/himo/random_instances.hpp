// Seeded random MDPs and feasible preference draws, used by the gradient
// and Fisher checks.
#pragma once

#include <random>

#include "himo/mdp.hpp"
#include "himo/policy.hpp"

namespace himo {

inline MdpModel make_random_mdp(std::mt19937& rng, int max_states = 5, int max_actions = 3) {
  std::uniform_int_distribution<int> state_count(1, max_states);
  std::uniform_int_distribution<int> action_count(1, max_actions);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  std::uniform_real_distribution<double> reward(-1.0, 1.0);

  const int S = state_count(rng);
  MdpModel model;
  for (int i = 0; i < S; ++i) {
    model.state_labels.push_back("s" + std::to_string(i));
    const int A = action_count(rng);
    Eigen::MatrixXd P(A, S), R(A, S);
    std::vector<std::string> names;
    for (int j = 0; j < A; ++j) {
      names.push_back("a" + std::to_string(j));
      double sum = 0.0;
      for (int k = 0; k < S; ++k) {
        P(j, k) = unit(rng);
        R(j, k) = reward(rng);
        sum += P(j, k);
      }
      P.row(j) /= sum;
    }
    model.action_labels.push_back(std::move(names));
    model.dynamics.push_back(std::move(P));
    model.rewards.push_back(std::move(R));
  }
  model.start_state = std::uniform_int_distribution<int>(0, S - 1)(rng);
  return model;
}

// Dirichlet-style draw kept away from the simplex boundary so finite
// difference perturbations stay feasible.
inline PreferenceVector make_random_feasible_prefs(std::mt19937& rng, const MdpModel& model,
                                                   const SaIndexMap& map) {
  std::uniform_real_distribution<double> unit(0.1, 1.0);
  PreferenceVector nu;
  nu.values.resize(map.independent_count);
  for (int i = 0; i < model.num_states(); ++i) {
    const int A = model.num_actions(i);
    Eigen::VectorXd raw(A);
    for (int j = 0; j < A; ++j) raw(j) = unit(rng);
    raw /= raw.sum();
    for (int j = 0; j < A; ++j) {
      const int r = map.ind_index(i, j);
      if (r >= 0) nu.values(r) = std::log(raw(j));
    }
  }
  return nu;
}

}  // namespace himo
