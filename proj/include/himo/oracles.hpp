// Independent ground-truth computations: truncated path enumeration for
// counter moments, central-difference gradients of the policy value, and
// value iteration. These deliberately share no code with path_geometry.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "himo/mdp.hpp"
#include "himo/path_geometry.hpp"
#include "himo/policy.hpp"

namespace himo {

struct OracleGuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PathMoments {
  Eigen::VectorXd first;   // <n_ij> per flattened state-action
  Eigen::MatrixXd second;  // <n_ij n_kl>
  int horizon = 0;
  double truncation_bound = 0.0;
};

namespace detail {

struct PathEnumerator {
  const MdpModel& model;
  const SaIndexMap& map;
  const PolicyTable& pi;
  double lambda;
  int horizon;
  std::vector<int> counts;
  PathMoments moments;

  // The process always realizes its first transition; every further
  // transition happens with survival probability lambda. A path of n
  // transitions therefore terminates with weight lambda^(n-1) (1-lambda)
  // times the product of policy and dynamics probabilities, and all n
  // transitions are counted.
  void walk(int state, int depth, double weight) {
    for (int j = 0; j < model.num_actions(state); ++j) {
      const double pj = pi.pi[state](j);
      const int f = map.flatten(state, j);
      ++counts[f];
      for (int k = 0; k < model.num_states(); ++k) {
        const double pk = model.dynamics[state](j, k);
        if (pk == 0.0) continue;
        const double w = weight * pj * pk;
        accumulate(w * (1.0 - lambda));
        if (depth + 1 < horizon) walk(k, depth + 1, w * lambda);
      }
      --counts[f];
    }
  }

  void accumulate(double w) {
    for (int f = 0; f < map.total; ++f) {
      if (counts[f] == 0) continue;
      moments.first(f) += w * counts[f];
      for (int g = 0; g < map.total; ++g)
        if (counts[g] != 0) moments.second(f, g) += w * static_cast<double>(counts[f]) * counts[g];
    }
  }
};

}  // namespace detail

// Exhaustively enumerates all paths up to `horizon` transitions and
// accumulates the first and second counter moments. Guarded by an estimate
// of the enumeration work (branching factor to the power of the horizon).
inline PathMoments enumerate_path_moments(const MdpModel& model, const SaIndexMap& map,
                                          const PolicyTable& pi, Foresight foresight,
                                          int horizon, double work_limit = 1e8) {
  int branching = 0;
  for (int i = 0; i < model.num_states(); ++i) {
    int b = 0;
    for (int j = 0; j < model.num_actions(i); ++j)
      b += static_cast<int>((model.dynamics[i].row(j).array() > 0.0).count());
    branching = std::max(branching, b);
  }
  const double work = std::pow(static_cast<double>(branching), horizon);
  if (work > work_limit)
    throw OracleGuardError("path enumeration would visit ~" + std::to_string(work) +
                           " prefixes (limit " + std::to_string(work_limit) + ")");

  detail::PathEnumerator enumerator{model, map, pi, foresight.lambda, horizon,
                                    std::vector<int>(map.total, 0), PathMoments{}};
  enumerator.moments.first = Eigen::VectorXd::Zero(map.total);
  enumerator.moments.second = Eigen::MatrixXd::Zero(map.total, map.total);
  enumerator.moments.horizon = horizon;
  enumerator.walk(model.start_state, 0, 1.0);

  const double lam = foresight.lambda;
  const double h = static_cast<double>(horizon);
  enumerator.moments.truncation_bound =
      std::pow(lam, h) * h * h / ((1.0 - lam) * (1.0 - lam));
  return enumerator.moments;
}

// Central differences of policy_value with respect to each independent
// preference, recomputing the dependent preferences and the full geometry
// inside every perturbed evaluation.
inline Eigen::VectorXd finite_difference_gradient(const MdpModel& model, const SaIndexMap& map,
                                                  const PreferenceVector& nu, Foresight foresight,
                                                  double eps = 1e-6) {
  const ExpectedRewardTable rbar = expected_rewards(model);
  auto value_at = [&](const PreferenceVector& point) {
    const PolicyTable pi = policy_from_preferences(model, map, point);
    const Eigen::MatrixXd T = transition_matrix(model, pi);
    const Eigen::MatrixXd D = successor_representation(T, foresight);
    return policy_value(D, pi, rbar, model.start_state);
  };

  Eigen::VectorXd grad(map.independent_count);
  for (int r = 0; r < map.independent_count; ++r) {
    double step = eps;
    int shrink = 0;
    for (;;) {
      PreferenceVector plus = nu, minus = nu;
      plus.values(r) += step;
      minus.values(r) -= step;
      if (preferences_feasible(model, map, plus) && preferences_feasible(model, map, minus)) {
        grad(r) = (value_at(plus) - value_at(minus)) / (2.0 * step);
        break;
      }
      if (++shrink > 3)
        throw std::runtime_error("finite differences infeasible at component " +
                                 std::to_string(r));
      step *= 0.1;
    }
  }
  return grad;
}

struct ValueIterationResult {
  Eigen::VectorXd values;
  std::vector<int> greedy;  // lowest-index tie-break
};

inline ValueIterationResult value_iteration(const MdpModel& model, Foresight foresight,
                                            double tol = 1e-12, int max_sweeps = 1000000) {
  const int S = model.num_states();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    Eigen::VectorXd next(S);
    for (int i = 0; i < S; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < model.num_actions(i); ++j) {
        const double q = model.dynamics[i].row(j).dot(
            (model.rewards[i].row(j).transpose() + foresight.lambda * v).eval());
        best = std::max(best, q);
      }
      next(i) = best;
    }
    const double delta = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (delta < tol) break;
  }

  ValueIterationResult result;
  result.values = v;
  result.greedy.resize(S);
  for (int i = 0; i < S; ++i) {
    int best_j = 0;
    double best_q = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < model.num_actions(i); ++j) {
      const double q = model.dynamics[i].row(j).dot(
          (model.rewards[i].row(j).transpose() + foresight.lambda * v).eval());
      if (q > best_q + 0.0) {
        best_q = q;
        best_j = j;
      }
    }
    result.greedy[i] = best_j;
  }
  return result;
}

}  // namespace himo
