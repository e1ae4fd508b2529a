// On-disk MDP format: JSON with top-level `states` (ordered list of
// {name, actions: [{name, transitions: [{to, p, r}]}]}) and `start`
// (state name). Per-action probabilities must sum to 1 within 1e-9 and
// are renormalized exactly on load.
#pragma once

#include <json.hpp>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "himo/mdp.hpp"

namespace himo {

struct ModelParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelValidationError : std::runtime_error {
  ValidationReport report;
  explicit ModelValidationError(ValidationReport r)
      : std::runtime_error("model validation failed: " +
                           (r.violations.empty() ? std::string("unknown") : r.violations[0])),
        report(std::move(r)) {}
};

inline MdpModel load_model(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& err) {
    throw ModelParseError(std::string("mdp file: ") + err.what());
  }

  auto need = [](const nlohmann::json& node, const char* field) -> const nlohmann::json& {
    if (!node.contains(field))
      throw ModelParseError(std::string("mdp file: missing field '") + field + "'");
    return node.at(field);
  };

  MdpModel model;
  std::unordered_map<std::string, int> state_index;
  const auto& states = need(doc, "states");
  for (const auto& state : states) {
    const std::string name = need(state, "name").get<std::string>();
    if (!state_index.emplace(name, static_cast<int>(model.state_labels.size())).second)
      throw ModelParseError("mdp file: duplicate state '" + name + "'");
    model.state_labels.push_back(name);
  }
  const int S = static_cast<int>(model.state_labels.size());

  for (const auto& state : states) {
    const auto& actions = need(state, "actions");
    const int A = static_cast<int>(actions.size());
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(A, S);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(A, S);
    std::vector<std::string> names;
    int j = 0;
    for (const auto& action : actions) {
      names.push_back(need(action, "name").get<std::string>());
      double row_sum = 0.0;
      for (const auto& transition : need(action, "transitions")) {
        const std::string to = need(transition, "to").get<std::string>();
        const auto found = state_index.find(to);
        if (found == state_index.end())
          throw ModelParseError("mdp file: unknown state '" + to + "' in transition of state '" +
                                need(state, "name").get<std::string>() + "'");
        const double p = need(transition, "p").get<double>();
        P(j, found->second) += p;
        R(j, found->second) = need(transition, "r").get<double>();
        row_sum += p;
      }
      if (std::abs(row_sum - 1.0) > 1e-9)
        throw ModelParseError("mdp file: probabilities of action '" + names.back() +
                              "' in state '" + need(state, "name").get<std::string>() +
                              "' sum to " + std::to_string(row_sum));
      if (row_sum > 0.0) P.row(j) /= row_sum;
      ++j;
    }
    model.action_labels.push_back(std::move(names));
    model.dynamics.push_back(std::move(P));
    model.rewards.push_back(std::move(R));
  }

  const std::string start = need(doc, "start").get<std::string>();
  const auto found = state_index.find(start);
  if (found == state_index.end())
    throw ModelParseError("mdp file: unknown start state '" + start + "'");
  model.start_state = found->second;

  ValidationReport report = validate_model(model);
  if (!report.ok()) throw ModelValidationError(std::move(report));
  return model;
}

inline std::string serialize_model(const MdpModel& model) {
  nlohmann::json doc;
  doc["start"] = model.state_labels[model.start_state];
  doc["states"] = nlohmann::json::array();
  for (int i = 0; i < model.num_states(); ++i) {
    nlohmann::json state;
    state["name"] = model.state_labels[i];
    state["actions"] = nlohmann::json::array();
    for (int j = 0; j < model.num_actions(i); ++j) {
      nlohmann::json action;
      action["name"] = i < static_cast<int>(model.action_labels.size())
                           ? model.action_labels[i][j]
                           : ("a" + std::to_string(j));
      action["transitions"] = nlohmann::json::array();
      for (int k = 0; k < model.num_states(); ++k) {
        if (model.dynamics[i](j, k) == 0.0) continue;
        action["transitions"].push_back({{"to", model.state_labels[k]},
                                         {"p", model.dynamics[i](j, k)},
                                         {"r", model.rewards[i](j, k)}});
      }
      state["actions"].push_back(std::move(action));
    }
    doc["states"].push_back(std::move(state));
  }
  return doc.dump(2) + "\n";
}

}  // namespace himo
