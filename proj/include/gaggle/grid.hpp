#pragma once

#include <array>
#include <cstdlib>
#include <string>

#include "gaggle/common.hpp"

namespace gaggle {

// The board is a fixed 7x11 torus. Cells are indexed 0..76 row-major.
inline constexpr int kRows = 7;
inline constexpr int kCols = 11;
inline constexpr int kCells = kRows * kCols;

using CellIndex = int;

struct GridCoord {
  int row = 0;
  int col = 0;
  friend bool operator==(const GridCoord&, const GridCoord&) = default;
};

inline GridCoord index_to_coord(CellIndex i) {
  expects(i >= 0 && i < kCells, "index_to_coord: cell index out of range");
  return {i / kCols, i % kCols};
}

inline CellIndex coord_to_index(GridCoord c) {
  expects(c.row >= 0 && c.row < kRows && c.col >= 0 && c.col < kCols,
          "coord_to_index: coordinate out of range");
  return c.row * kCols + c.col;
}

enum class Action : int { North = 0, East = 1, South = 2, West = 3 };

inline constexpr std::array<Action, 4> kAllActions = {Action::North, Action::East,
                                                      Action::South, Action::West};

inline Action opposite(Action a) {
  switch (a) {
    case Action::North: return Action::South;
    case Action::East: return Action::West;
    case Action::South: return Action::North;
    case Action::West: return Action::East;
  }
  throw ContractViolation("opposite: bad action");
}

inline const char* action_name(Action a) {
  switch (a) {
    case Action::North: return "NORTH";
    case Action::East: return "EAST";
    case Action::South: return "SOUTH";
    case Action::West: return "WEST";
  }
  throw ContractViolation("action_name: bad action");
}

// Row/col deltas; north decreases the row index.
inline GridCoord action_delta(Action a) {
  switch (a) {
    case Action::North: return {-1, 0};
    case Action::East: return {0, 1};
    case Action::South: return {1, 0};
    case Action::West: return {0, -1};
  }
  throw ContractViolation("action_delta: bad action");
}

inline int wrap_row(int r) { return ((r % kRows) + kRows) % kRows; }
inline int wrap_col(int c) { return ((c % kCols) + kCols) % kCols; }

// One-cell move with toroidal wrap.
inline CellIndex move_cell(CellIndex from, Action a) {
  GridCoord c = index_to_coord(from);
  GridCoord d = action_delta(a);
  return wrap_row(c.row + d.row) * kCols + wrap_col(c.col + d.col);
}

// Manhattan distance on the torus: each axis wraps, so the per-axis distance
// is min(|d|, extent - |d|). Maximum over all cell pairs is 3 + 5 = 8.
inline int toroidal_distance(CellIndex a, CellIndex b) {
  GridCoord ca = index_to_coord(a);
  GridCoord cb = index_to_coord(b);
  int dr = std::abs(ca.row - cb.row);
  int dc = std::abs(ca.col - cb.col);
  return std::min(dr, kRows - dr) + std::min(dc, kCols - dc);
}

inline constexpr int kMaxToroidalDistance = kRows / 2 + kCols / 2;  // 8

}  // namespace gaggle
