// himo command-line tool: run experiments and verify the analytic
// machinery against independent oracles.
//
// Exit codes: 0 success/convergence, 1 check failed, 2 max-iters,
// 3 step failure, 64 usage error, 65 oracle guard, 66 unreadable model.
#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "himo/emit.hpp"
#include "himo/environments.hpp"
#include "himo/mdp_io.hpp"
#include "himo/optimizer.hpp"
#include "himo/oracles.hpp"
#include "himo/random_instances.hpp"

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitMaxIters = 2;
constexpr int kExitStepFailure = 3;
constexpr int kExitUsage = 64;
constexpr int kExitOracleGuard = 65;
constexpr int kExitBadModel = 66;

himo::MdpModel resolve_env(const std::string& env) {
  if (env.rfind("builtin:", 0) == 0) {
    auto model = himo::make_builtin(env.substr(8));
    if (!model) throw std::runtime_error("unknown builtin environment '" + env + "'");
    return *model;
  }
  std::ifstream in(env, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read model file '" + env + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (env.size() > 5 && env.substr(env.size() - 5) == ".grid")
    return himo::build_room_world(himo::parse_grid_layout(text));
  return himo::load_model(text);
}

// Follow the greedy policy from the start state until a state repeats.
std::vector<int> greedy_trajectory(const himo::MdpModel& model, const std::vector<int>& greedy) {
  std::vector<int> path;
  std::set<int> seen;
  int s = model.start_state;
  while (seen.insert(s).second) {
    path.push_back(s);
    const Eigen::RowVectorXd row = model.dynamics[s].row(greedy[s]);
    int next = 0;
    row.maxCoeff(&next);
    s = next;
  }
  return path;
}

struct RunOptions {
  std::string env;
  himo::HimoConfig config;
  himo::OmegaRule omega_rule = himo::OmegaRule::LastAction;
  int smoothing = 1;
  std::string out_dir = "out";
  bool plots = false;
};

int do_run(const RunOptions& options) {
  himo::MdpModel model;
  try {
    model = resolve_env(options.env);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitBadModel;
  }

  const himo::SaIndexMap map = himo::sa_index(model, options.omega_rule);
  const auto start = std::chrono::steady_clock::now();
  const himo::RunTrace trace = himo::run_himo(model, map, options.config);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

  himo::RunManifest manifest;
  manifest.environment = options.env;
  manifest.config = options.config;
  manifest.omega_rule = options.omega_rule;
  manifest.smoothing = options.smoothing;
  manifest.wall_seconds = elapsed.count();
  manifest.convergence_reason = himo::stop_reason_name(trace.reason);
  manifest.final_value = trace.iterations.back().value;

  himo::MeasureBundle measures;
  if (trace.iterations.size() >= 3) {
    measures = himo::compute_measures(trace, options.smoothing);
  } else {
    // Too short for derivatives; emit flat series of the right shape.
    himo::RunTrace padded = trace;
    while (padded.iterations.size() < 3) padded.iterations.push_back(padded.iterations.back());
    measures = himo::compute_measures(padded, options.smoothing);
  }
  himo::emit_outputs(options.out_dir, model, trace, measures, manifest, options.plots);

  std::cout << "environment: " << options.env << "\n"
            << "iterations:  " << trace.iterations.size() - 1 << "\n"
            << "stop reason: " << manifest.convergence_reason << "\n"
            << "final value: " << himo::format_double(manifest.final_value) << "\n";

  switch (trace.reason) {
    case himo::StopReason::Converged:
    case himo::StopReason::StepConverged: return 0;
    case himo::StopReason::MaxIters: return kExitMaxIters;
    case himo::StopReason::StepFailed:
      std::cerr << "error: " << trace.failure_message << "\n";
      return kExitStepFailure;
  }
  return 0;
}

int do_gradcheck(int trials, unsigned seed) {
  std::mt19937 rng(seed);
  const double lambdas[] = {0.3, 0.5, 0.9};
  double max_rel_err = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const himo::MdpModel model = himo::make_random_mdp(rng);
    const himo::SaIndexMap map = himo::sa_index(model);
    if (map.independent_count == 0) continue;
    const himo::PreferenceVector nu = himo::make_random_feasible_prefs(rng, model, map);
    const himo::Foresight foresight{lambdas[trial % 3]};

    const himo::PolicyTable pi = himo::policy_from_preferences(model, map, nu);
    const himo::ExpectedRewardTable rbar = himo::expected_rewards(model);
    const himo::PathGeometry geo = himo::build_geometry(model, map, pi, rbar, foresight);
    const Eigen::VectorXd analytic = himo::path_gradient(geo.C, pi, rbar, map);
    const Eigen::VectorXd numeric = himo::finite_difference_gradient(model, map, nu, foresight);

    const double scale = std::max(1.0, numeric.cwiseAbs().maxCoeff());
    max_rel_err = std::max(max_rel_err, (analytic - numeric).cwiseAbs().maxCoeff() / scale);
  }
  std::cout << "gradcheck: trials=" << trials << " max rel err " << max_rel_err << "\n";
  return max_rel_err < 1e-6 ? 0 : kExitCheckFailed;
}

int do_moments(const std::string& env, double lambda, int horizon) {
  const himo::MdpModel model = resolve_env(env);
  const himo::SaIndexMap map = himo::sa_index(model);
  const himo::PreferenceVector nu = himo::init_random_policy(model, map);
  const himo::PolicyTable pi = himo::policy_from_preferences(model, map, nu);
  const himo::ExpectedRewardTable rbar = himo::expected_rewards(model);
  const himo::Foresight foresight{lambda};

  const himo::PathGeometry geo = himo::build_geometry(model, map, pi, rbar, foresight);
  const himo::PathMoments moments =
      himo::enumerate_path_moments(model, map, pi, foresight, horizon);
  const double deviation = (geo.C - moments.second).cwiseAbs().maxCoeff();
  std::cout << "moments: env=" << env << " horizon=" << horizon << " max |C - oracle| "
            << deviation << " (truncation bound " << moments.truncation_bound << ")\n";
  return deviation <= 1e-4 + moments.truncation_bound ? 0 : kExitCheckFailed;
}

int do_compare_vi(const std::string& env, const himo::HimoConfig& config) {
  const himo::MdpModel model = resolve_env(env);
  const himo::SaIndexMap map = himo::sa_index(model);
  const himo::RunTrace trace = himo::run_himo(model, map, config);
  const std::vector<int> himo_greedy = himo::greedy_policy(trace.iterations.back().pi);
  const himo::ValueIterationResult vi = himo::value_iteration(model, config.foresight);

  const std::vector<int> path = greedy_trajectory(model, vi.greedy);
  int agree = 0;
  for (int s : path)
    if (himo_greedy[s] == vi.greedy[s]) ++agree;

  std::cout << "compare-vi: env=" << env << " agreement: " << (100 * agree / path.size())
            << "% on optimal path (" << agree << "/" << path.size() << " states)\n";
  return agree == static_cast<int>(path.size()) ? 0 : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical model-based policy optimization"};
  app.require_subcommand(1);

  RunOptions run_options;
  unsigned seed = 0;
  std::string manifest_path;

  CLI::App* run = app.add_subcommand("run", "optimize a policy and emit trace files");
  run->add_option("--env", run_options.env, "builtin:NAME or model file path");
  run->add_option("--manifest", manifest_path, "load configuration from a run manifest");
  run->add_option("--lambda", run_options.config.foresight.lambda, "foresight in (0,1)")
      ->check(CLI::Range(1e-12, 1.0 - 1e-12));
  run->add_option("--max-iters", run_options.config.max_iters);
  run->add_option("--value-tol", run_options.config.value_tol);
  run->add_option("--step-tol", run_options.config.step_tol);
  run->add_option("--damping", run_options.config.damping);
  run->add_option("--eta", run_options.config.step_scale)->check(CLI::Range(1e-12, 1.0));
  std::string omega_rule = "last";
  run->add_option("--omega-rule", omega_rule)->check(CLI::IsMember({"last", "first"}));
  run->add_option("--seed", seed, "recorded for reproducibility; the run is deterministic");
  run->add_option("--out-dir", run_options.out_dir);
  run->add_flag("--plots", run_options.plots, "emit one SVG per measure panel");
  run->add_option("--smoothing", run_options.smoothing)->check(CLI::PositiveNumber);

  CLI::App* check = app.add_subcommand("check", "verify against independent oracles");
  check->require_subcommand(1);

  int trials = 100;
  CLI::App* gradcheck = check->add_subcommand("gradcheck", "analytic vs finite-difference gradient");
  gradcheck->add_option("--trials", trials);
  gradcheck->add_option("--seed", seed);

  std::string check_env = "builtin:chain2";
  double check_lambda = 0.5;
  int horizon = 25;
  CLI::App* moments = check->add_subcommand("moments", "C vs truncated path enumeration");
  moments->add_option("--env", check_env);
  moments->add_option("--lambda", check_lambda)->check(CLI::Range(1e-12, 1.0 - 1e-12));
  moments->add_option("--horizon", horizon);

  himo::HimoConfig vi_config;
  std::string vi_env;
  CLI::App* compare = check->add_subcommand("compare-vi", "HIMO greedy vs value iteration");
  compare->add_option("--env", vi_env)->required();
  compare->add_option("--lambda", vi_config.foresight.lambda)
      ->check(CLI::Range(1e-12, 1.0 - 1e-12));
  compare->add_option("--max-iters", vi_config.max_iters);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return err.get_exit_code() == 0 ? 0 : kExitUsage;
  }

  try {
    if (run->parsed()) {
      if (!manifest_path.empty()) {
        std::ifstream in(manifest_path);
        if (!in) {
          std::cerr << "error: cannot read manifest '" << manifest_path << "'\n";
          return kExitBadModel;
        }
        const himo::RunManifest manifest = himo::manifest_from_json(nlohmann::json::parse(in));
        run_options.env = manifest.environment;
        run_options.config = manifest.config;
        run_options.omega_rule = manifest.omega_rule;
        run_options.smoothing = manifest.smoothing;
      }
      if (run_options.env.empty()) {
        std::cerr << "error: --env (or --manifest) is required\n";
        return kExitUsage;
      }
      if (manifest_path.empty() || run->count("--omega-rule") > 0)
        run_options.omega_rule =
            omega_rule == "first" ? himo::OmegaRule::FirstAction : himo::OmegaRule::LastAction;
      return do_run(run_options);
    }
    if (gradcheck->parsed()) return do_gradcheck(trials, seed);
    if (moments->parsed()) return do_moments(check_env, check_lambda, horizon);
    if (compare->parsed()) return do_compare_vi(vi_env, vi_config);
  } catch (const himo::OracleGuardError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitOracleGuard;
  } catch (const himo::ModelParseError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitBadModel;
  } catch (const himo::ModelValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    for (const auto& violation : err.report.violations) std::cerr << "  " << violation << "\n";
    return kExitBadModel;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitBadModel;
  }
  return kExitUsage;
}
