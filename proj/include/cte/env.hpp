#pragma once

#include <compare>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "cte/rng.hpp"

namespace cte {

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

inline int manhattan(Cell a, Cell b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

// The nine actions available in every state. The numeric order is frozen:
// it indexes policy distributions and the serialized action names.
enum class EnvAction : int {
  MoveUp = 0,
  MoveDown = 1,
  MoveLeft = 2,
  MoveRight = 3,
  InteractUp = 4,
  InteractDown = 5,
  InteractLeft = 6,
  InteractRight = 7,
  Stand = 8,
};

inline constexpr int kNumActions = 9;

inline bool is_move(EnvAction a) { return static_cast<int>(a) < 4; }
inline bool is_interact(EnvAction a) {
  return static_cast<int>(a) >= 4 && static_cast<int>(a) < 8;
}

// Direction offset of a move or interact; zero for Stand. y grows downward.
Cell action_delta(EnvAction a);

const char* action_name(EnvAction a);
EnvAction action_from_name(const std::string& name);

// Rescue-gridworld configuration. Playable cells span 1..extent on both
// axes; cells at 0 and extent+1 are walls. The extinguisher sits in the
// bottom-right playable cell.
struct GridConfig {
  int extent = 6;
  int n_humans = 7;
  int n_obstacles = 4;
  int horizon = 75;
  uint64_t seed = 0;

  Cell extinguisher() const { return {extent, extent}; }
  int playable_cells() const { return extent * extent; }
  // Throws std::invalid_argument on overflow or degenerate values.
  void validate() const;
};

struct GridState {
  Cell player;
  std::vector<Cell> humans;     // unsaved humans, kept sorted
  std::vector<Cell> obstacles;  // kept sorted
  int t = 0;
  int saved_count = 0;
  int extent = 6;
  int horizon = 75;

  bool operator==(const GridState&) const = default;

  Cell extinguisher() const { return {extent, extent}; }
  bool in_bounds(Cell c) const {
    return c.x >= 1 && c.x <= extent && c.y >= 1 && c.y <= extent;
  }
  bool has_obstacle(Cell c) const;
  bool has_human(Cell c) const;
};

struct StepResult {
  GridState next;
  double gt_reward = 0.0;
  bool terminal = false;
};

// Places player, humans and obstacles on distinct playable cells sampled
// uniformly without replacement; the extinguisher cell stays free.
GridState init_random(const GridConfig& cfg, Rng& rng);

// Pure transition: moves are blocked by walls and obstacles (humans' cells
// are enterable), Interact removes an adjacent human, Stand is a no-op.
// Ground truth pays +10 per human saved and +1 per step the player ends on
// the extinguisher cell. Throws std::logic_error when s.t >= horizon.
StepResult step(const GridState& s, EnvAction a);

// ASCII frame: '#' border, 'P' player, 'C' human, 'H' obstacle,
// 'G' extinguisher, ' ' empty. The player glyph wins shared cells.
std::string render(const GridState& s);

}  // namespace cte
