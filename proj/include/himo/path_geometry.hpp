// Analytic quantities at a fixed policy: policy-averaged transition
// operator T, successor representation D = (I - lambda T)^{-1},
// state-action successor E, counter correlations C, the path Fisher
// information over independent preferences, the path gradient, and the
// policy value.
#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "himo/mdp.hpp"
#include "himo/policy.hpp"

namespace himo {

struct Foresight {
  double lambda;  // per-step continuation probability, in (0,1)
};

inline Eigen::MatrixXd transition_matrix(const MdpModel& model, const PolicyTable& pi) {
  const int S = model.num_states();
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(S, S);
  for (int i = 0; i < S; ++i)
    T.row(i) = pi.pi[i].transpose() * model.dynamics[i];
  return T;
}

inline Eigen::MatrixXd successor_representation(const Eigen::MatrixXd& T, Foresight foresight) {
  const int S = static_cast<int>(T.rows());
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(S, S) - foresight.lambda * T;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  return lu.solve(Eigen::MatrixXd::Identity(S, S));
}

// E_(ij)k = lambda * sum_k' p(i,j,k') D(k',k). One survival factor per
// realized transition; D itself carries the remaining discounting.
inline Eigen::MatrixXd sa_successor(const MdpModel& model, const SaIndexMap& map,
                                    const Eigen::MatrixXd& D, Foresight foresight) {
  Eigen::MatrixXd E(map.total, model.num_states());
  for (int i = 0; i < model.num_states(); ++i)
    E.middleRows(map.offset[i], model.num_actions(i)) =
        foresight.lambda * model.dynamics[i] * D;
  return E;
}

// C(ij,kl) = <n_ij n_kl> under the path measure:
//   d0_i pi_ij delta_ik delta_jl + [d0_i E_(ij)k + d0_k E_(kl)i] pi_ij pi_kl
// where d0 is the start-state row of D.
inline Eigen::MatrixXd counter_correlations(const Eigen::MatrixXd& D, const Eigen::MatrixXd& E,
                                            const PolicyTable& pi, const SaIndexMap& map,
                                            int start_state) {
  const Eigen::RowVectorXd d0 = D.row(start_state);
  Eigen::MatrixXd C(map.total, map.total);
  for (int f = 0; f < map.total; ++f) {
    const int i = map.state_of[f];
    const double pi_f = pi.pi[i](map.action_of[f]);
    for (int g = f; g < map.total; ++g) {
      const int k = map.state_of[g];
      const double pi_g = pi.pi[k](map.action_of[g]);
      double c = (d0(i) * E(f, k) + d0(k) * E(g, i)) * pi_f * pi_g;
      if (f == g) c += d0(i) * pi_f;
      C(f, g) = c;
      C(g, f) = c;
    }
  }
  return C;
}

// Fisher information over independent state-actions, built from C by
// eliminating the dependent (omega) coordinates:
//   I(ij,kl) = C(ij,kl) - (pi_kl/pi_kw) C(ij,kw) - (pi_ij/pi_iw) C(kl,iw)
//              + (pi_ij pi_kl / (pi_iw pi_kw)) C(iw,kw)
inline Eigen::MatrixXd fisher_information(const Eigen::MatrixXd& C, const PolicyTable& pi,
                                          const SaIndexMap& map) {
  const int n = map.independent_count;
  Eigen::MatrixXd fisher(n, n);
  for (int a = 0; a < n; ++a) {
    const int f = map.flat_of_ind[a];
    const int i = map.state_of[f];
    const int fw = map.flatten(i, map.omega[i]);
    const double ratio_f = pi.pi[i](map.action_of[f]) / pi.pi[i](map.omega[i]);
    for (int b = a; b < n; ++b) {
      const int g = map.flat_of_ind[b];
      const int k = map.state_of[g];
      const int gw = map.flatten(k, map.omega[k]);
      const double ratio_g = pi.pi[k](map.action_of[g]) / pi.pi[k](map.omega[k]);
      const double v = C(f, g) - ratio_g * C(f, gw) - ratio_f * C(g, fw) +
                       ratio_f * ratio_g * C(fw, gw);
      fisher(a, b) = v;
      fisher(b, a) = v;
    }
  }
  return fisher;
}

// dV/dnu_ij = sum_kl [C(ij,kl) - (pi_ij/pi_iw) C(iw,kl)] rbar_kl
inline Eigen::VectorXd path_gradient(const Eigen::MatrixXd& C, const PolicyTable& pi,
                                     const ExpectedRewardTable& rbar, const SaIndexMap& map) {
  Eigen::VectorXd rbar_flat(map.total);
  for (int g = 0; g < map.total; ++g)
    rbar_flat(g) = rbar(map.state_of[g], map.action_of[g]);

  Eigen::VectorXd grad(map.independent_count);
  for (int a = 0; a < map.independent_count; ++a) {
    const int f = map.flat_of_ind[a];
    const int i = map.state_of[f];
    const int fw = map.flatten(i, map.omega[i]);
    const double ratio = pi.pi[i](map.action_of[f]) / pi.pi[i](map.omega[i]);
    grad(a) = (C.row(f) - ratio * C.row(fw)).dot(rbar_flat);
  }
  return grad;
}

// V = sum_kl D(s0,k) pi_kl rbar_kl (occupancy-weighted expected reward).
inline double policy_value(const Eigen::MatrixXd& D, const PolicyTable& pi,
                           const ExpectedRewardTable& rbar, int start_state) {
  double value = 0.0;
  for (int k = 0; k < static_cast<int>(pi.pi.size()); ++k)
    value += D(start_state, k) * pi.pi[k].dot(rbar.rbar[k]);
  return value;
}

struct PathGeometry {
  Eigen::MatrixXd T;
  Eigen::MatrixXd D;
  Eigen::MatrixXd E;
  Eigen::MatrixXd C;
  Eigen::MatrixXd fisher;
  Eigen::RowVectorXd d0;
  double value = 0.0;
};

inline PathGeometry build_geometry(const MdpModel& model, const SaIndexMap& map,
                                   const PolicyTable& pi, const ExpectedRewardTable& rbar,
                                   Foresight foresight) {
  PathGeometry geo;
  geo.T = transition_matrix(model, pi);
  geo.D = successor_representation(geo.T, foresight);
  geo.E = sa_successor(model, map, geo.D, foresight);
  geo.C = counter_correlations(geo.D, geo.E, pi, map, model.start_state);
  geo.fisher = fisher_information(geo.C, pi, map);
  geo.d0 = geo.D.row(model.start_state);
  geo.value = policy_value(geo.D, pi, rbar, model.start_state);
  return geo;
}

}  // namespace himo
