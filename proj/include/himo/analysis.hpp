// Interrogation measures over a run trace: per-state policy divergence
// (KL against the prior), counter difference (occupancy change), per-state
// max-normalization, time derivatives, and peak-time extraction.
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "himo/optimizer.hpp"

namespace himo {

enum class MeasureKind { PD, CD, NormalizedPD, NormalizedCD, Derivative };

struct MeasureSeries {
  Eigen::MatrixXd values;  // states x iterations
  MeasureKind kind;
};

// PD(s,t) = KL[pi^t_s || pi^0_s], zero at t = 0.
inline MeasureSeries policy_divergence(const RunTrace& trace) {
  if (trace.iterations.empty()) throw std::invalid_argument("empty trace");
  const int T = static_cast<int>(trace.iterations.size());
  const int S = static_cast<int>(trace.iterations[0].pi.pi.size());
  MeasureSeries series{Eigen::MatrixXd::Zero(S, T), MeasureKind::PD};
  const PolicyTable& prior = trace.iterations[0].pi;
  for (int t = 0; t < T; ++t) {
    const PolicyTable& pi = trace.iterations[t].pi;
    for (int s = 0; s < S; ++s) {
      double kl = 0.0;
      for (int j = 0; j < pi.pi[s].size(); ++j)
        kl += pi.pi[s](j) * std::log(pi.pi[s](j) / prior.pi[s](j));
      series.values(s, t) = kl;
    }
  }
  return series;
}

// CD(s,t) = D^t(s0,s) - D^0(s0,s), from the occupancy rows stored in the trace.
inline MeasureSeries counter_difference(const RunTrace& trace) {
  if (trace.iterations.empty()) throw std::invalid_argument("empty trace");
  const int T = static_cast<int>(trace.iterations.size());
  const int S = static_cast<int>(trace.iterations[0].d0.size());
  MeasureSeries series{Eigen::MatrixXd::Zero(S, T), MeasureKind::CD};
  for (int t = 0; t < T; ++t)
    series.values.col(t) = (trace.iterations[t].d0 - trace.iterations[0].d0).transpose();
  return series;
}

// Per-state division by max_t PD (for PD) or max_t |CD| (for CD).
// All-zero rows stay all-zero.
inline MeasureSeries max_normalize(const MeasureSeries& series) {
  MeasureSeries out{series.values,
                    series.kind == MeasureKind::CD ? MeasureKind::NormalizedCD
                                                   : MeasureKind::NormalizedPD};
  for (int s = 0; s < out.values.rows(); ++s) {
    const double denom = series.kind == MeasureKind::CD
                             ? series.values.row(s).cwiseAbs().maxCoeff()
                             : series.values.row(s).maxCoeff();
    if (denom != 0.0) out.values.row(s) /= denom;
  }
  return out;
}

struct DerivativeSeries {
  MeasureSeries series;
  std::vector<int> peak_time;  // argmax_t of the derivative, lowest t wins ties
};

// Differences over the iteration index: each derivative sample is the
// change arriving at that iteration (backward difference; forward at
// t = 0), so a jump between t-1 and t peaks the derivative at t.
// Optional moving-average smoothing of width w is applied first.
inline DerivativeSeries time_derivative(const MeasureSeries& input, int smoothing_window = 1) {
  const int S = static_cast<int>(input.values.rows());
  const int T = static_cast<int>(input.values.cols());
  if (T < 3) throw std::invalid_argument("series too short for a time derivative");

  Eigen::MatrixXd smoothed = input.values;
  if (smoothing_window > 1) {
    for (int s = 0; s < S; ++s)
      for (int t = 0; t < T; ++t) {
        const int lo = std::max(0, t - smoothing_window / 2);
        const int hi = std::min(T - 1, t + smoothing_window / 2);
        smoothed(s, t) = input.values.row(s).segment(lo, hi - lo + 1).mean();
      }
  }

  DerivativeSeries out;
  out.series.kind = MeasureKind::Derivative;
  out.series.values.resize(S, T);
  for (int t = 0; t < T; ++t) {
    if (t == 0)
      out.series.values.col(t) = smoothed.col(1) - smoothed.col(0);
    else
      out.series.values.col(t) = smoothed.col(t) - smoothed.col(t - 1);
  }

  out.peak_time.resize(S);
  for (int s = 0; s < S; ++s) {
    int best = 0;
    for (int t = 1; t < T; ++t)
      if (out.series.values(s, t) > out.series.values(s, best)) best = t;
    out.peak_time[s] = best;
  }
  return out;
}

}  // namespace himo
