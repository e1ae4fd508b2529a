// Run outputs: CSV trace and measures tables, the final policy table,
// the run manifest, and static SVG plots. Byte output is deterministic
// for identical inputs; wall-clock data lives only in the manifest.
#pragma once

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "himo/analysis.hpp"
#include "himo/optimizer.hpp"

namespace himo {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline const char* stop_reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::Converged: return "value-converged";
    case StopReason::StepConverged: return "step-converged";
    case StopReason::MaxIters: return "max-iters";
    case StopReason::StepFailed: return "step-failed";
  }
  return "unknown";
}

struct RunManifest {
  std::string environment;
  HimoConfig config;
  OmegaRule omega_rule = OmegaRule::LastAction;
  int smoothing = 1;
  std::string tool_version = "himo 0.1.0";
  double wall_seconds = 0.0;
  std::string convergence_reason;
  double final_value = 0.0;
};

inline nlohmann::json manifest_to_json(const RunManifest& manifest) {
  return {
      {"environment", manifest.environment},
      {"lambda", manifest.config.foresight.lambda},
      {"max_iters", manifest.config.max_iters},
      {"value_tol", manifest.config.value_tol},
      {"step_tol", manifest.config.step_tol},
      {"damping", manifest.config.damping},
      {"eta", manifest.config.step_scale},
      {"backtrack_factor", manifest.config.backtrack_factor},
      {"max_backtracks", manifest.config.max_backtracks},
      {"omega_rule", manifest.omega_rule == OmegaRule::LastAction ? "last" : "first"},
      {"smoothing", manifest.smoothing},
      {"tool_version", manifest.tool_version},
      {"wall_seconds", manifest.wall_seconds},
      {"convergence_reason", manifest.convergence_reason},
      {"final_value", manifest.final_value},
  };
}

inline RunManifest manifest_from_json(const nlohmann::json& doc) {
  RunManifest manifest;
  manifest.environment = doc.at("environment").get<std::string>();
  manifest.config.foresight.lambda = doc.at("lambda").get<double>();
  manifest.config.max_iters = doc.at("max_iters").get<int>();
  manifest.config.value_tol = doc.at("value_tol").get<double>();
  manifest.config.step_tol = doc.at("step_tol").get<double>();
  manifest.config.damping = doc.at("damping").get<double>();
  manifest.config.step_scale = doc.at("eta").get<double>();
  manifest.config.backtrack_factor = doc.at("backtrack_factor").get<double>();
  manifest.config.max_backtracks = doc.at("max_backtracks").get<int>();
  manifest.omega_rule = doc.at("omega_rule").get<std::string>() == "first"
                            ? OmegaRule::FirstAction
                            : OmegaRule::LastAction;
  manifest.smoothing = doc.at("smoothing").get<int>();
  manifest.tool_version = doc.at("tool_version").get<std::string>();
  manifest.wall_seconds = doc.at("wall_seconds").get<double>();
  manifest.convergence_reason = doc.at("convergence_reason").get<std::string>();
  manifest.final_value = doc.at("final_value").get<double>();
  return manifest;
}

inline std::string trace_csv(const RunTrace& trace) {
  std::ostringstream out;
  out << "iter,value,grad_norm,step_scale,backtracks\n";
  for (std::size_t t = 0; t < trace.iterations.size(); ++t) {
    const auto& rec = trace.iterations[t];
    out << t << ',' << format_double(rec.value) << ',' << format_double(rec.grad_norm) << ','
        << format_double(rec.step_scale) << ',' << rec.backtracks << '\n';
  }
  return out.str();
}

struct MeasureBundle {
  MeasureSeries pd, cd, pd_norm, cd_norm;
  MeasureSeries pd_vel, cd_vel;
  std::vector<int> pd_peak, cd_peak;
};

inline MeasureBundle compute_measures(const RunTrace& trace, int smoothing = 1) {
  MeasureBundle bundle{policy_divergence(trace), counter_difference(trace),
                       MeasureSeries{}, MeasureSeries{}, MeasureSeries{}, MeasureSeries{},
                       {}, {}};
  bundle.pd_norm = max_normalize(bundle.pd);
  bundle.cd_norm = max_normalize(bundle.cd);
  DerivativeSeries pd_vel = time_derivative(bundle.pd_norm, smoothing);
  DerivativeSeries cd_vel = time_derivative(bundle.cd_norm, smoothing);
  bundle.pd_vel = std::move(pd_vel.series);
  bundle.cd_vel = std::move(cd_vel.series);
  bundle.pd_peak = std::move(pd_vel.peak_time);
  bundle.cd_peak = std::move(cd_vel.peak_time);
  return bundle;
}

inline std::string measures_csv(const MeasureBundle& bundle) {
  std::ostringstream out;
  out << "iter,state,pd,cd,pd_norm,cd_norm,pd_vel,cd_vel\n";
  const int S = static_cast<int>(bundle.pd.values.rows());
  const int T = static_cast<int>(bundle.pd.values.cols());
  for (int t = 0; t < T; ++t)
    for (int s = 0; s < S; ++s)
      out << t << ',' << s << ',' << format_double(bundle.pd.values(s, t)) << ','
          << format_double(bundle.cd.values(s, t)) << ','
          << format_double(bundle.pd_norm.values(s, t)) << ','
          << format_double(bundle.cd_norm.values(s, t)) << ','
          << format_double(bundle.pd_vel.values(s, t)) << ','
          << format_double(bundle.cd_vel.values(s, t)) << '\n';
  return out.str();
}

inline std::string policy_csv(const MdpModel& model, const PolicyTable& pi) {
  std::ostringstream out;
  out << "state,action,pi\n";
  for (int i = 0; i < model.num_states(); ++i)
    for (int j = 0; j < model.num_actions(i); ++j)
      out << model.state_labels[i] << ',' << model.action_labels[i][j] << ','
          << format_double(pi.pi[i](j)) << '\n';
  return out.str();
}

// Minimal per-panel line plot: one polyline per state over iterations.
inline std::string series_svg(const Eigen::MatrixXd& values, const std::string& title) {
  const int S = static_cast<int>(values.rows());
  const int T = static_cast<int>(values.cols());
  const double w = 640, h = 400, pad = 40;
  double lo = values.minCoeff(), hi = values.maxCoeff();
  if (hi <= lo) hi = lo + 1.0;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << title << "</text>\n";
  for (int s = 0; s < S; ++s) {
    const int hue = (s * 360) / std::max(S, 1);
    out << "<polyline fill=\"none\" stroke=\"hsl(" << hue
        << ",70%,45%)\" stroke-width=\"1\" points=\"";
    for (int t = 0; t < T; ++t) {
      const double x = pad + (w - 2 * pad) * (T > 1 ? static_cast<double>(t) / (T - 1) : 0.0);
      const double y = h - pad - (h - 2 * pad) * (values(s, t) - lo) / (hi - lo);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", x, y);
      out << buf;
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

inline void emit_outputs(const std::filesystem::path& out_dir, const MdpModel& model,
                         const RunTrace& trace, const MeasureBundle& measures,
                         const RunManifest& manifest, bool plots) {
  std::filesystem::create_directories(out_dir);
  write_file(out_dir / "run.json", manifest_to_json(manifest).dump(2) + "\n");
  write_file(out_dir / "trace.csv", trace_csv(trace));
  write_file(out_dir / "measures.csv", measures_csv(measures));
  write_file(out_dir / "policy.csv", policy_csv(model, trace.iterations.back().pi));
  if (plots) {
    write_file(out_dir / "pd.svg", series_svg(measures.pd.values, "policy divergence"));
    write_file(out_dir / "cd.svg", series_svg(measures.cd.values, "counter difference"));
    write_file(out_dir / "pd_norm.svg",
               series_svg(measures.pd_norm.values, "normalized policy divergence"));
    write_file(out_dir / "cd_norm.svg",
               series_svg(measures.cd_norm.values, "normalized counter difference"));
    write_file(out_dir / "pd_vel.svg",
               series_svg(measures.pd_vel.values, "policy divergence velocity"));
    write_file(out_dir / "cd_vel.svg",
               series_svg(measures.cd_vel.values, "counter difference velocity"));

    Eigen::MatrixXd value_row(1, trace.iterations.size());
    for (std::size_t t = 0; t < trace.iterations.size(); ++t)
      value_row(0, static_cast<int>(t)) = trace.iterations[t].value;
    write_file(out_dir / "value.svg", series_svg(value_row, "policy value"));
  }
}

}  // namespace himo
