// Benchmark MDP constructors: Tower of Hanoi and a four-room grid world
// with an optional one-way wormhole. All transitions are deterministic;
// the only reward is +1 on the goal state's "remain" action.
#pragma once

#include <array>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "himo/mdp.hpp"

namespace himo {

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

struct RoomLayout {
  int width = 0;
  int height = 0;
  std::set<Cell> walls;
  std::set<Cell> doorways;  // open cells carved out of walls
  Cell start;
  Cell goal;
  std::optional<std::pair<Cell, Cell>> wormhole;  // entrance -> exit, one-way

  bool in_bounds(Cell c) const {
    return c.row >= 0 && c.row < height && c.col >= 0 && c.col < width;
  }
  bool walkable(Cell c) const {
    return in_bounds(c) && (!walls.contains(c) || doorways.contains(c));
  }
};

// 11x11 grid split into four rooms by wall row 5 and wall column 5, one
// doorway per shared wall. 104 walkable cells.
inline RoomLayout default_four_room_layout(bool with_wormhole = false) {
  RoomLayout layout;
  layout.width = 11;
  layout.height = 11;
  for (int c = 0; c < 11; ++c) layout.walls.insert({5, c});
  for (int r = 0; r < 11; ++r) layout.walls.insert({r, 5});
  layout.doorways = {{5, 2}, {5, 8}, {2, 5}, {8, 5}};
  layout.start = {1, 1};
  layout.goal = {9, 9};
  if (with_wormhole) layout.wormhole = {{Cell{3, 3}, Cell{9, 7}}};
  return layout;
}

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

inline std::vector<Cell> walkable_cells(const RoomLayout& layout) {
  std::vector<Cell> cells;
  for (int r = 0; r < layout.height; ++r)
    for (int c = 0; c < layout.width; ++c)
      if (layout.walkable({r, c})) cells.push_back({r, c});
  return cells;
}

inline bool connected(const RoomLayout& layout, const std::vector<Cell>& cells) {
  if (cells.empty()) return false;
  std::set<Cell> seen{layout.start};
  std::queue<Cell> frontier;
  frontier.push(layout.start);
  while (!frontier.empty()) {
    const Cell cur = frontier.front();
    frontier.pop();
    for (const Cell next : {Cell{cur.row - 1, cur.col}, Cell{cur.row + 1, cur.col},
                            Cell{cur.row, cur.col - 1}, Cell{cur.row, cur.col + 1}})
      if (layout.walkable(next) && seen.insert(next).second) frontier.push(next);
  }
  // A wormhole exit is reachable through the wormhole even if fenced off.
  std::size_t reachable = seen.size();
  if (layout.wormhole && seen.contains(layout.wormhole->first) &&
      !seen.contains(layout.wormhole->second))
    ++reachable;
  return reachable == cells.size();
}

}  // namespace detail

inline void validate_layout(const RoomLayout& layout) {
  detail::require(layout.width > 0 && layout.height > 0, "layout has no cells");
  detail::require(layout.walkable(layout.start), "start cell not walkable");
  detail::require(layout.walkable(layout.goal), "goal cell not walkable");
  for (const Cell d : layout.doorways)
    detail::require(layout.walls.contains(d), "doorway not within a wall");
  if (layout.wormhole) {
    detail::require(layout.walkable(layout.wormhole->first), "wormhole entrance not walkable");
    detail::require(layout.walkable(layout.wormhole->second), "wormhole exit not walkable");
  }
  detail::require(detail::connected(layout, detail::walkable_cells(layout)),
                  "layout is disconnected");
}

// Actions: up, down, left, right, remain (in that order, remain last).
// Bumping a wall or the boundary is a self-transition. Any movement action
// taken at the wormhole entrance lands at the wormhole exit.
inline MdpModel build_room_world(const RoomLayout& layout) {
  validate_layout(layout);
  const std::vector<Cell> cells = detail::walkable_cells(layout);
  const int S = static_cast<int>(cells.size());

  auto index_of = [&cells](Cell c) {
    for (int i = 0; i < static_cast<int>(cells.size()); ++i)
      if (cells[i] == c) return i;
    return -1;
  };

  static constexpr std::array<std::pair<int, int>, 4> kMoves = {
      {{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
  static const std::array<std::string, 5> kNames = {"up", "down", "left", "right", "remain"};

  MdpModel model;
  const int goal = index_of(layout.goal);
  model.start_state = index_of(layout.start);
  for (int i = 0; i < S; ++i) {
    std::ostringstream label;
    label << "(" << cells[i].row << "," << cells[i].col << ")";
    model.state_labels.push_back(label.str());
    model.action_labels.emplace_back(kNames.begin(), kNames.end());

    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(5, S);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(5, S);
    const bool at_entrance = layout.wormhole && cells[i] == layout.wormhole->first;
    for (int a = 0; a < 4; ++a) {
      Cell target = {cells[i].row + kMoves[a].first, cells[i].col + kMoves[a].second};
      if (at_entrance)
        target = layout.wormhole->second;
      else if (!layout.walkable(target))
        target = cells[i];
      P(a, index_of(target)) = 1.0;
    }
    P(4, i) = 1.0;  // remain
    if (i == goal) R(4, i) = 1.0;
    model.dynamics.push_back(std::move(P));
    model.rewards.push_back(std::move(R));
  }
  return model;
}

// State encoding: base-3 digit d is the peg of disk d (disk 0 smallest).
// Actions are every legal single-disk move (sorted by disk then target
// peg) plus a final "remain" self-loop.
inline MdpModel build_tower_of_hanoi(int n_disks) {
  detail::require(n_disks >= 1, "n_disks must be at least 1");
  int S = 1;
  for (int d = 0; d < n_disks; ++d) S *= 3;

  auto peg_of = [n_disks](int state, int disk) {
    for (int d = 0; d < disk; ++d) state /= 3;
    return state % 3;
  };
  auto top_disk = [&](int state, int peg) {  // smallest disk on peg, or n_disks
    for (int d = 0; d < n_disks; ++d)
      if (peg_of(state, d) == peg) return d;
    return n_disks;
  };

  MdpModel model;
  model.start_state = 0;
  const int goal = S - 1;  // all digits 2: every disk on peg 2
  int pow3 = 1;
  std::vector<int> pow3s(n_disks);
  for (int d = 0; d < n_disks; ++d, pow3 *= 3) pow3s[d] = pow3;

  for (int s = 0; s < S; ++s) {
    std::ostringstream label;
    label << "toh:";
    for (int d = 0; d < n_disks; ++d) label << peg_of(s, d);
    model.state_labels.push_back(label.str());

    std::vector<std::string> names;
    std::vector<int> targets;
    for (int d = 0; d < n_disks; ++d) {
      const int from = peg_of(s, d);
      if (top_disk(s, from) != d) continue;  // not topmost
      for (int to = 0; to < 3; ++to) {
        if (to == from || top_disk(s, to) < d) continue;
        names.push_back("move" + std::to_string(d) + "->" + std::to_string(to));
        targets.push_back(s + (to - from) * pow3s[d]);
      }
    }
    names.push_back("remain");
    targets.push_back(s);

    const int A = static_cast<int>(names.size());
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(A, S);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(A, S);
    for (int j = 0; j < A; ++j) P(j, targets[j]) = 1.0;
    if (s == goal) R(A - 1, goal) = 1.0;
    model.action_labels.push_back(std::move(names));
    model.dynamics.push_back(std::move(P));
    model.rewards.push_back(std::move(R));
  }
  return model;
}

// Text grid: '#' wall, '.' floor, 'S' start, 'G' goal, 'W' wormhole
// endpoint (0 or 2 of them; first in row-major order is the entrance).
inline RoomLayout parse_grid_layout(const std::string& text) {
  RoomLayout layout;
  std::vector<Cell> wormholes;
  std::istringstream in(text);
  std::string line;
  int row = 0;
  bool have_start = false, have_goal = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    layout.width = std::max(layout.width, static_cast<int>(line.size()));
    for (int col = 0; col < static_cast<int>(line.size()); ++col) {
      const Cell cell{row, col};
      switch (line[col]) {
        case '#': layout.walls.insert(cell); break;
        case '.': break;
        case 'S': layout.start = cell; have_start = true; break;
        case 'G': layout.goal = cell; have_goal = true; break;
        case 'W': wormholes.push_back(cell); break;
        default:
          throw std::invalid_argument(std::string("unknown grid character '") + line[col] +
                                      "' at row " + std::to_string(row));
      }
    }
    ++row;
  }
  layout.height = row;
  detail::require(have_start && have_goal, "grid needs exactly one S and one G");
  detail::require(wormholes.size() == 0 || wormholes.size() == 2,
                  "grid needs exactly 0 or 2 W cells");
  if (wormholes.size() == 2) layout.wormhole = {{wormholes[0], wormholes[1]}};
  return layout;
}

// Environment names accepted by the CLI.
inline std::optional<MdpModel> make_builtin(const std::string& name) {
  if (name == "toh1") return build_tower_of_hanoi(1);
  if (name == "toh2") return build_tower_of_hanoi(2);
  if (name == "toh3") return build_tower_of_hanoi(3);
  if (name == "rooms") return build_room_world(default_four_room_layout(false));
  if (name == "rooms-wormhole") return build_room_world(default_four_room_layout(true));
  if (name == "chain2") {
    // Two-state chain: s0 {go, stay}, s1 absorbing with reward 1.
    MdpModel model;
    model.state_labels = {"s0", "s1"};
    model.action_labels = {{"go", "stay"}, {"loop"}};
    Eigen::MatrixXd P0(2, 2), R0 = Eigen::MatrixXd::Zero(2, 2);
    P0 << 0, 1, 1, 0;
    Eigen::MatrixXd P1(1, 2), R1(1, 2);
    P1 << 0, 1;
    R1 << 0, 1;
    model.dynamics = {P0, P1};
    model.rewards = {R0, R1};
    model.start_state = 0;
    return model;
  }
  return std::nullopt;
}

}  // namespace himo
