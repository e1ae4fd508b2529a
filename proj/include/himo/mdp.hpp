// Tabular MDP data model: states, per-state action sets, stochastic
// dynamics and reward tensors, plus the state-action flattening used
// throughout the path-geometry computations.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace himo {

struct MdpModel {
  std::vector<std::string> state_labels;
  std::vector<std::vector<std::string>> action_labels;
  // dynamics[i] and rewards[i] are |A_i| x |S| matrices; row j of
  // dynamics[i] is the successor distribution of action j in state i.
  std::vector<Eigen::MatrixXd> dynamics;
  std::vector<Eigen::MatrixXd> rewards;
  int start_state = 0;

  int num_states() const { return static_cast<int>(dynamics.size()); }
  int num_actions(int i) const { return static_cast<int>(dynamics[i].rows()); }
  int total_actions() const {
    int n = 0;
    for (int i = 0; i < num_states(); ++i) n += num_actions(i);
    return n;
  }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

inline ValidationReport validate_model(const MdpModel& model) {
  ValidationReport report;
  auto fail = [&report](const std::string& msg) { report.violations.push_back(msg); };

  const int S = model.num_states();
  if (S == 0) fail("model has no states");
  if (static_cast<int>(model.state_labels.size()) != S)
    fail("state_labels size does not match state count");
  if (model.start_state < 0 || model.start_state >= S)
    fail("start_state " + std::to_string(model.start_state) + " out of range");
  if (model.rewards.size() != model.dynamics.size())
    fail("rewards tensor shape does not match dynamics");

  for (int i = 0; i < S; ++i) {
    const auto& P = model.dynamics[i];
    if (P.rows() < 1) {
      fail("state " + std::to_string(i) + " has no actions");
      continue;
    }
    if (P.cols() != S) {
      fail("dynamics rows of state " + std::to_string(i) + " have wrong width");
      continue;
    }
    for (int j = 0; j < P.rows(); ++j) {
      double row_sum = 0.0;
      for (int k = 0; k < S; ++k) {
        const double p = P(j, k);
        if (!(p >= 0.0 && p <= 1.0)) {
          std::ostringstream os;
          os << "probability entry (" << i << "," << j << "," << k << ") = " << p
             << " outside [0,1]";
          fail(os.str());
        }
        row_sum += p;
        if (p > 0.0 && !std::isfinite(model.rewards[i](j, k))) {
          std::ostringstream os;
          os << "reward entry (" << i << "," << j << "," << k << ") not finite";
          fail(os.str());
        }
      }
      if (std::abs(row_sum - 1.0) > 1e-12) {
        std::ostringstream os;
        os << "row (" << i << "," << j << ") sums to " << row_sum;
        fail(os.str());
      }
    }
  }
  return report;
}

// Divides every dynamics row by its sum so derived tensors see rows that
// sum to 1 exactly (up to one rounding of the division).
inline void renormalize_dynamics(MdpModel& model) {
  for (auto& P : model.dynamics)
    for (int j = 0; j < P.rows(); ++j) {
      const double s = P.row(j).sum();
      if (s > 0.0) P.row(j) /= s;
    }
}

enum class OmegaRule { LastAction, FirstAction };

// Bijective flattening of (state, action) pairs onto [0, total), with one
// designated dependent (omega) action per state. Independent state-actions
// (everything except the omega entries) get their own compact indexing,
// which is the coordinate system of preferences, gradients and the Fisher
// matrix.
struct SaIndexMap {
  int total = 0;
  int independent_count = 0;
  std::vector<int> offset;        // per state: first flat index
  std::vector<int> omega;         // per state: dependent action index
  std::vector<int> state_of;      // flat -> state
  std::vector<int> action_of;     // flat -> action
  std::vector<int> ind_of_flat;   // flat -> independent index, -1 for omega
  std::vector<int> flat_of_ind;   // independent index -> flat

  int flatten(int i, int j) const { return offset[i] + j; }
  int ind_index(int i, int j) const { return ind_of_flat[flatten(i, j)]; }
  int num_states() const { return static_cast<int>(offset.size()); }
};

inline SaIndexMap sa_index(const MdpModel& model, OmegaRule rule = OmegaRule::LastAction) {
  SaIndexMap map;
  const int S = model.num_states();
  map.offset.resize(S);
  map.omega.resize(S);
  for (int i = 0; i < S; ++i) {
    map.offset[i] = map.total;
    const int a = model.num_actions(i);
    map.omega[i] = (rule == OmegaRule::LastAction) ? a - 1 : 0;
    for (int j = 0; j < a; ++j) {
      map.state_of.push_back(i);
      map.action_of.push_back(j);
      if (j == map.omega[i]) {
        map.ind_of_flat.push_back(-1);
      } else {
        map.ind_of_flat.push_back(map.independent_count++);
        map.flat_of_ind.push_back(map.total);
      }
      ++map.total;
    }
  }
  return map;
}

// Expected one-step reward per state-action: rbar(i,j) = sum_k p(i,j,k) R(i,j,k).
struct ExpectedRewardTable {
  std::vector<Eigen::VectorXd> rbar;  // per state, length |A_i|
  double operator()(int i, int j) const { return rbar[i](j); }
};

inline ExpectedRewardTable expected_rewards(const MdpModel& model) {
  ExpectedRewardTable table;
  table.rbar.reserve(model.num_states());
  for (int i = 0; i < model.num_states(); ++i)
    table.rbar.push_back(model.dynamics[i].cwiseProduct(model.rewards[i]).rowwise().sum());
  return table;
}

}  // namespace himo
