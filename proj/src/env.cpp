#include "cte/env.hpp"

#include <algorithm>
#include <stdexcept>

namespace cte {

Cell action_delta(EnvAction a) {
  switch (a) {
    case EnvAction::MoveUp:
    case EnvAction::InteractUp:
      return {0, -1};
    case EnvAction::MoveDown:
    case EnvAction::InteractDown:
      return {0, 1};
    case EnvAction::MoveLeft:
    case EnvAction::InteractLeft:
      return {-1, 0};
    case EnvAction::MoveRight:
    case EnvAction::InteractRight:
      return {1, 0};
    case EnvAction::Stand:
      return {0, 0};
  }
  return {0, 0};
}

const char* action_name(EnvAction a) {
  switch (a) {
    case EnvAction::MoveUp: return "move_up";
    case EnvAction::MoveDown: return "move_down";
    case EnvAction::MoveLeft: return "move_left";
    case EnvAction::MoveRight: return "move_right";
    case EnvAction::InteractUp: return "interact_up";
    case EnvAction::InteractDown: return "interact_down";
    case EnvAction::InteractLeft: return "interact_left";
    case EnvAction::InteractRight: return "interact_right";
    case EnvAction::Stand: return "stand";
  }
  return "unknown";
}

EnvAction action_from_name(const std::string& name) {
  for (int i = 0; i < kNumActions; ++i) {
    const auto a = static_cast<EnvAction>(i);
    if (name == action_name(a)) return a;
  }
  throw std::invalid_argument("unknown action name: " + name);
}

void GridConfig::validate() const {
  if (extent < 2) throw std::invalid_argument("grid extent must be at least 2");
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (n_humans < 0 || n_obstacles < 0) {
    throw std::invalid_argument("entity counts must be non-negative");
  }
  // player + extinguisher + humans + obstacles all need distinct cells
  if (n_humans + n_obstacles + 2 > playable_cells()) {
    throw std::invalid_argument("configuration overflow: entities do not fit the grid");
  }
}

bool GridState::has_obstacle(Cell c) const {
  return std::binary_search(obstacles.begin(), obstacles.end(), c);
}

bool GridState::has_human(Cell c) const {
  return std::binary_search(humans.begin(), humans.end(), c);
}

GridState init_random(const GridConfig& cfg, Rng& rng) {
  cfg.validate();

  std::vector<Cell> cells;
  cells.reserve(static_cast<size_t>(cfg.playable_cells()) - 1);
  for (int y = 1; y <= cfg.extent; ++y) {
    for (int x = 1; x <= cfg.extent; ++x) {
      if (Cell{x, y} == cfg.extinguisher()) continue;
      cells.push_back({x, y});
    }
  }

  // partial Fisher-Yates: draw the first n_needed entries without replacement
  const int n_needed = 1 + cfg.n_humans + cfg.n_obstacles;
  for (int i = 0; i < n_needed; ++i) {
    const int j = uniform_int(rng, i, static_cast<int>(cells.size()) - 1);
    std::swap(cells[static_cast<size_t>(i)], cells[static_cast<size_t>(j)]);
  }

  GridState s;
  s.extent = cfg.extent;
  s.horizon = cfg.horizon;
  s.player = cells[0];
  s.humans.assign(cells.begin() + 1, cells.begin() + 1 + cfg.n_humans);
  s.obstacles.assign(cells.begin() + 1 + cfg.n_humans,
                     cells.begin() + 1 + cfg.n_humans + cfg.n_obstacles);
  std::sort(s.humans.begin(), s.humans.end());
  std::sort(s.obstacles.begin(), s.obstacles.end());
  s.t = 0;
  s.saved_count = 0;
  return s;
}

StepResult step(const GridState& s, EnvAction a) {
  if (s.t >= s.horizon) {
    throw std::logic_error("step past horizon");
  }

  StepResult r;
  r.next = s;
  GridState& n = r.next;

  if (is_move(a)) {
    const Cell d = action_delta(a);
    const Cell target{s.player.x + d.x, s.player.y + d.y};
    if (n.in_bounds(target) && !n.has_obstacle(target)) {
      n.player = target;
    }
  } else if (is_interact(a)) {
    const Cell d = action_delta(a);
    const Cell target{s.player.x + d.x, s.player.y + d.y};
    const auto it = std::lower_bound(n.humans.begin(), n.humans.end(), target);
    if (it != n.humans.end() && *it == target) {
      n.humans.erase(it);
      n.saved_count += 1;
      r.gt_reward += 10.0;
    }
  }
  // Stand: nothing

  n.t += 1;
  if (n.player == n.extinguisher()) {
    r.gt_reward += 1.0;
  }
  r.terminal = (n.t == n.horizon);
  return r;
}

std::string render(const GridState& s) {
  const int side = s.extent + 2;
  std::vector<std::string> grid(static_cast<size_t>(side),
                                std::string(static_cast<size_t>(side), ' '));
  for (int i = 0; i < side; ++i) {
    grid[0][static_cast<size_t>(i)] = '#';
    grid[static_cast<size_t>(side - 1)][static_cast<size_t>(i)] = '#';
    grid[static_cast<size_t>(i)][0] = '#';
    grid[static_cast<size_t>(i)][static_cast<size_t>(side - 1)] = '#';
  }
  const Cell ext = s.extinguisher();
  grid[static_cast<size_t>(ext.y)][static_cast<size_t>(ext.x)] = 'G';
  for (const Cell& c : s.obstacles) grid[static_cast<size_t>(c.y)][static_cast<size_t>(c.x)] = 'H';
  for (const Cell& c : s.humans) grid[static_cast<size_t>(c.y)][static_cast<size_t>(c.x)] = 'C';
  grid[static_cast<size_t>(s.player.y)][static_cast<size_t>(s.player.x)] = 'P';

  std::string out;
  out.reserve(static_cast<size_t>(side * (side + 1)));
  for (const auto& row : grid) {
    out += row;
    out += '\n';
  }
  return out;
}

}  // namespace cte
