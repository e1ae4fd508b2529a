// The HIMO iteration: damped natural path gradient (Newton) steps with
// feasibility and value backtracking, convergence detection, and trace
// recording.
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "himo/mdp.hpp"
#include "himo/path_geometry.hpp"
#include "himo/policy.hpp"

namespace himo {

struct HimoConfig {
  Foresight foresight{0.95};
  int max_iters = 1000;
  double value_tol = 1e-10;
  double step_tol = 1e-9;
  double damping = 1e-9;     // ridge relative to the Fisher max diagonal
  double step_scale = 1.0;   // eta, full Newton step by default
  double backtrack_factor = 0.5;
  int max_backtracks = 60;
};

// A state whose dependent action holds less probability than this is
// treated as sitting on the feasibility boundary.
inline constexpr double kBoundarySnap = 1e-5;

struct StepFailure : std::runtime_error {
  double grad_norm;
  explicit StepFailure(double norm)
      : std::runtime_error("backtracking exhausted at gradient norm " + std::to_string(norm)),
        grad_norm(norm) {}
};

struct IterationRecord {
  PreferenceVector nu;
  PolicyTable pi;
  double value = 0.0;
  double grad_norm = 0.0;
  double step_scale = 0.0;
  int backtracks = 0;
  Eigen::RowVectorXd d0;  // start-state occupancy row of D
};

enum class StopReason { Converged, StepConverged, MaxIters, StepFailed };

struct RunTrace {
  std::vector<IterationRecord> iterations;
  StopReason reason = StopReason::MaxIters;
  std::string failure_message;
};

struct StepDiagnostics {
  double value = 0.0;
  double grad_norm = 0.0;
  double applied_scale = 0.0;
  double step_inf_norm = 0.0;
  int backtracks = 0;
};

// Per-state contiguous range of a state's independent preference indices.
struct IndependentBlock {
  int begin = 0;
  int count = 0;
};

inline std::vector<IndependentBlock> independent_blocks(const SaIndexMap& map) {
  std::vector<IndependentBlock> blocks(map.num_states());
  for (int r = 0; r < map.independent_count; ++r) {
    const int s = map.state_of[map.flat_of_ind[r]];
    if (blocks[s].count == 0) blocks[s].begin = r;
    ++blocks[s].count;
  }
  return blocks;
}

// Shift the marked states' preference blocks down uniformly so their
// exponential sums land back on the feasibility margin. Action ratios
// within a block are preserved.
inline void project_marked_blocks(const std::vector<IndependentBlock>& blocks,
                                  const std::vector<char>& marked, PreferenceVector& nu) {
  const double limit = std::log1p(-kFeasibilityMargin);
  for (std::size_t s = 0; s < blocks.size(); ++s) {
    if (!marked[s] || blocks[s].count == 0) continue;
    auto block = nu.values.segment(blocks[s].begin, blocks[s].count);
    const double peak = block.maxCoeff();
    const double lse = peak + std::log((block.array() - peak).exp().sum());
    // The extra 1e-15 absorbs re-exponentiation rounding in the
    // downstream feasibility check.
    if (lse > limit) block.array() -= lse - limit + 1e-15;
  }
}

// One natural path gradient step: solve (I_F + rho diag) dnu = g, project
// onto the feasible set, then shrink the step until the value does not
// decrease.
inline PreferenceVector himo_step(const MdpModel& model, const SaIndexMap& map,
                                  const PreferenceVector& nu, const ExpectedRewardTable& rbar,
                                  const HimoConfig& config, StepDiagnostics& diag) {
  const PolicyTable pi = policy_from_preferences(model, map, nu);
  const PathGeometry geo = build_geometry(model, map, pi, rbar, config.foresight);
  const Eigen::VectorXd grad = path_gradient(geo.C, pi, rbar, map);

  diag.value = geo.value;
  diag.grad_norm = map.independent_count > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
  diag.applied_scale = 0.0;
  diag.step_inf_norm = 0.0;
  diag.backtracks = 0;
  if (map.independent_count == 0) return nu;

  // The Fisher diagonal spans many orders of magnitude once some states go
  // near-deterministic; a single ridge would swamp the small coordinates.
  // Jacobi-scale to unit diagonal, damp there, and scale the solution back.
  // The floor is relative to the max diagonal so that rounding noise in
  // rows of vanishing actions cannot be amplified into the solve.
  const double diag_floor = 1e-12 * std::max(geo.fisher.diagonal().maxCoeff(), 1e-300);
  const Eigen::VectorXd jacobi =
      geo.fisher.diagonal().cwiseMax(diag_floor).cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd fisher = jacobi.asDiagonal() * geo.fisher * jacobi.asDiagonal();
  fisher.diagonal().array() += config.damping;
  Eigen::VectorXd direction =
      jacobi.asDiagonal() * fisher.ldlt().solve((jacobi.asDiagonal() * grad).eval());
  // If cancellation still left the system indefinite, the solve can hand
  // back a descent direction; the preconditioned gradient always ascends.
  if (!direction.allFinite() || grad.dot(direction) <= 0.0)
    direction = jacobi.array().square().matrix().asDiagonal() * grad;

  // States hugging the feasibility boundary (dependent probability below
  // kBoundarySnap) would veto every scaled step whose direction points
  // outward, stalling the whole backtracking loop while the flow needs to
  // slide along the boundary face. Those states get projected back onto
  // the margin instead; everything else is handled by plain step
  // shrinking. Snapping perturbs the policy by at most kBoundarySnap and
  // the value check below still guards monotonicity.
  const std::vector<IndependentBlock> blocks = independent_blocks(map);
  std::vector<char> pinned(map.num_states(), 0);
  for (int s = 0; s < map.num_states(); ++s) {
    if (blocks[s].count == 0) continue;
    const double sum =
        nu.values.segment(blocks[s].begin, blocks[s].count).array().exp().sum();
    pinned[s] = sum >= 1.0 - kBoundarySnap;
  }

  double scale = config.step_scale;
  for (int attempt = 0; attempt <= config.max_backtracks; ++attempt) {
    PreferenceVector candidate{nu.values + scale * direction};
    project_marked_blocks(blocks, pinned, candidate);
    if (preferences_feasible(model, map, candidate)) {
      const PolicyTable new_pi = policy_from_preferences(model, map, candidate);
      const Eigen::MatrixXd T = transition_matrix(model, new_pi);
      const Eigen::MatrixXd D = successor_representation(T, config.foresight);
      const double new_value = policy_value(D, new_pi, rbar, model.start_state);
      if (new_value >= geo.value) {
        diag.applied_scale = scale;
        diag.step_inf_norm = (candidate.values - nu.values).cwiseAbs().maxCoeff();
        diag.backtracks = attempt;
        return candidate;
      }
    }
    scale *= config.backtrack_factor;
  }
  throw StepFailure(diag.grad_norm);
}

// Iterates himo_step from the uniform prior until the value or the step
// stops moving. The t=0 record is the prior policy itself.
inline RunTrace run_himo(const MdpModel& model, const SaIndexMap& map, const HimoConfig& config) {
  const ExpectedRewardTable rbar = expected_rewards(model);
  RunTrace trace;

  PreferenceVector nu = init_random_policy(model, map);
  {
    IterationRecord rec;
    rec.nu = nu;
    rec.pi = policy_from_preferences(model, map, nu);
    const Eigen::MatrixXd T = transition_matrix(model, rec.pi);
    const Eigen::MatrixXd D = successor_representation(T, config.foresight);
    rec.value = policy_value(D, rec.pi, rbar, model.start_state);
    rec.d0 = D.row(model.start_state);
    trace.iterations.push_back(std::move(rec));
  }

  if (map.independent_count == 0) {
    trace.reason = StopReason::Converged;
    return trace;
  }

  for (int t = 1; t <= config.max_iters; ++t) {
    StepDiagnostics diag;
    PreferenceVector next;
    try {
      next = himo_step(model, map, nu, rbar, config, diag);
    } catch (const StepFailure& failure) {
      trace.reason = StopReason::StepFailed;
      trace.failure_message = failure.what();
      return trace;
    }

    IterationRecord rec;
    rec.nu = next;
    rec.pi = policy_from_preferences(model, map, next);
    const Eigen::MatrixXd T = transition_matrix(model, rec.pi);
    const Eigen::MatrixXd D = successor_representation(T, config.foresight);
    rec.value = policy_value(D, rec.pi, rbar, model.start_state);
    rec.d0 = D.row(model.start_state);
    rec.grad_norm = diag.grad_norm;
    rec.step_scale = diag.applied_scale;
    rec.backtracks = diag.backtracks;

    const double prev_value = trace.iterations.back().value;
    trace.iterations.push_back(std::move(rec));
    nu = next;

    if (std::abs(trace.iterations.back().value - prev_value) < config.value_tol) {
      trace.reason = StopReason::Converged;
      return trace;
    }
    if (diag.step_inf_norm < config.step_tol) {
      trace.reason = StopReason::StepConverged;
      return trace;
    }
  }
  trace.reason = StopReason::MaxIters;
  return trace;
}

}  // namespace himo
