// Exponential policy parametrization: independent log-probability action
// preferences with one dependent (omega) entry per state fixed by
// normalization.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "himo/mdp.hpp"

namespace himo {

// Preference updates must stay strictly inside the feasible region: each
// independent nu below 0 and the per-state exp-sum strictly below 1.
inline constexpr double kFeasibilityMargin = 1e-12;

struct FeasibilityError : std::runtime_error {
  double offending_sum;
  explicit FeasibilityError(double sum)
      : std::runtime_error("preference exp-sum " + std::to_string(sum) +
                           " leaves no probability for the dependent action"),
        offending_sum(sum) {}
};

struct PreferenceVector {
  Eigen::VectorXd values;  // one entry per independent state-action
};

struct PolicyTable {
  std::vector<Eigen::VectorXd> pi;  // per state, length |A_i|
};

// log(1 - sum_j e^{nu_j}) for the independent preferences of one state.
inline double dependent_preference(std::span<const double> prefs_at_state) {
  double sum = 0.0;
  for (double nu : prefs_at_state) sum += std::exp(nu);
  if (sum >= 1.0) throw FeasibilityError(sum);
  return std::log1p(-sum);
}

inline bool preferences_feasible(const MdpModel& model, const SaIndexMap& map,
                                 const PreferenceVector& nu,
                                 double margin = kFeasibilityMargin) {
  for (int i = 0; i < model.num_states(); ++i) {
    double sum = 0.0;
    for (int j = 0; j < model.num_actions(i); ++j) {
      const int r = map.ind_index(i, j);
      if (r < 0) continue;
      if (!(nu.values(r) <= -margin)) return false;
      sum += std::exp(nu.values(r));
    }
    if (!(sum <= 1.0 - margin)) return false;
  }
  return true;
}

inline PolicyTable policy_from_preferences(const MdpModel& model, const SaIndexMap& map,
                                           const PreferenceVector& nu) {
  PolicyTable table;
  table.pi.reserve(model.num_states());
  for (int i = 0; i < model.num_states(); ++i) {
    const int a = model.num_actions(i);
    Eigen::VectorXd row(a);
    double sum = 0.0;
    for (int j = 0; j < a; ++j) {
      const int r = map.ind_index(i, j);
      if (r < 0) continue;
      row(j) = std::exp(nu.values(r));
      sum += row(j);
    }
    if (sum >= 1.0) throw FeasibilityError(sum);
    row(map.omega[i]) = 1.0 - sum;
    table.pi.push_back(std::move(row));
  }
  return table;
}

inline PreferenceVector preferences_from_policy(const MdpModel& model, const SaIndexMap& map,
                                                const PolicyTable& pi) {
  PreferenceVector nu;
  nu.values.resize(map.independent_count);
  for (int r = 0; r < map.independent_count; ++r) {
    const int f = map.flat_of_ind[r];
    nu.values(r) = std::log(pi.pi[map.state_of[f]](map.action_of[f]));
  }
  (void)model;
  return nu;
}

// Uniform prior: pi_ij = 1/|A_i|, nu_ij = -log|A_i|.
inline PreferenceVector init_random_policy(const MdpModel& model, const SaIndexMap& map) {
  PreferenceVector nu;
  nu.values.resize(map.independent_count);
  for (int r = 0; r < map.independent_count; ++r) {
    const int i = map.state_of[map.flat_of_ind[r]];
    nu.values(r) = -std::log(static_cast<double>(model.num_actions(i)));
  }
  return nu;
}

// Argmax action per state, ties broken toward the lowest index.
inline std::vector<int> greedy_policy(const PolicyTable& table) {
  std::vector<int> actions;
  actions.reserve(table.pi.size());
  for (const auto& row : table.pi) {
    int best = 0;
    for (int j = 1; j < row.size(); ++j)
      if (row(j) > row(best)) best = j;
    actions.push_back(best);
  }
  return actions;
}

}  // namespace himo
