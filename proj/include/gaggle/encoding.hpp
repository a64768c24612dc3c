#pragma once

#include <cstdint>
#include <vector>

#include "gaggle/common.hpp"
#include "gaggle/env.hpp"
#include "gaggle/grid.hpp"
#include "gaggle/tensor.hpp"

namespace gaggle {

// Binary one-hot grid stack (channels x 7 x 11), the network input. Stored
// compactly as bytes; stack_states() widens batches to doubles for the nets.
struct StateTensor {
  int channels = 0;
  std::vector<uint8_t> cells;  // channels * kCells, each 0 or 1

  StateTensor() = default;
  explicit StateTensor(int c) : channels(c), cells(static_cast<size_t>(c) * kCells, 0) {}

  uint8_t get(int c, CellIndex cell) const { return cells[static_cast<size_t>(c) * kCells + cell]; }
  void set(int c, CellIndex cell) { cells[static_cast<size_t>(c) * kCells + cell] = 1; }

  int channel_sum(int c) const {
    int s = 0;
    for (int i = 0; i < kCells; ++i) s += cells[static_cast<size_t>(c) * kCells + i];
    return s;
  }

  Tensor to_tensor() const {
    Tensor t({channels, kRows, kCols});
    for (size_t i = 0; i < cells.size(); ++i) t.data[i] = static_cast<double>(cells[i]);
    return t;
  }

  friend bool operator==(const StateTensor&, const StateTensor&) = default;
};

enum class EncoderVariant { Full17, Slim3 };

inline int encoder_channels(EncoderVariant v) { return v == EncoderVariant::Full17 ? 17 : 3; }

inline constexpr CellIndex kDefaultCenterCell = 3 * kCols + 5;  // geometric center (3,5)

struct EncoderKind {
  EncoderVariant variant = EncoderVariant::Full17;
  bool center_player = false;
  CellIndex center_cell = kDefaultCenterCell;
};

// 17-channel encoding from the player's perspective:
//   0      player head            8      player entire body
//   1-3    enemy heads            9-11   enemy entire bodies
//   4      player tail cell       12     player previous head
//   5-7    enemy tails            13-15  enemy previous heads
//   16     food
// Enemy slots are ordered by ascending goose index, skipping the player, so
// an enemy keeps its channel for the whole episode. Dead geese contribute
// all-zero channels. Previous-head channels are zero when prev is absent.
inline StateTensor encode_full(const GameState& s, const GameState* prev, int player) {
  expects(player >= 0 && player < 4, "encode_full: bad player index");
  StateTensor t(17);
  int slot = 0;  // 0 = player, 1..3 = enemies in ascending index order
  for (int g = 0; g < 4; ++g) {
    int at = g == player ? 0 : ++slot;
    const Goose& goose = s.geese[g];
    if (goose.alive) {
      t.set(at == 0 ? 0 : at, goose.head());
      t.set(at == 0 ? 4 : 4 + at, goose.body.back());
      for (CellIndex c : goose.body) t.set(at == 0 ? 8 : 8 + at, c);
      if (prev && prev->geese[g].alive) t.set(at == 0 ? 12 : 12 + at, prev->geese[g].head());
    }
  }
  for (CellIndex c : s.food) t.set(16, c);
  return t;
}

// 3-channel encoding: player body, union of enemy bodies, food.
inline StateTensor encode_slim(const GameState& s, int player) {
  expects(player >= 0 && player < 4, "encode_slim: bad player index");
  StateTensor t(3);
  for (int g = 0; g < 4; ++g) {
    if (!s.geese[g].alive) continue;
    for (CellIndex c : s.geese[g].body) t.set(g == player ? 0 : 1, c);
  }
  for (CellIndex c : s.food) t.set(2, c);
  return t;
}

// Toroidal translation of every channel by (dr, dc).
inline StateTensor translate_torus(const StateTensor& t, int dr, int dc) {
  StateTensor out(t.channels);
  dr = ((dr % kRows) + kRows) % kRows;
  dc = ((dc % kCols) + kCols) % kCols;
  for (int ch = 0; ch < t.channels; ++ch) {
    for (int r = 0; r < kRows; ++r) {
      for (int c = 0; c < kCols; ++c) {
        if (t.get(ch, r * kCols + c))
          out.set(ch, ((r + dr) % kRows) * kCols + (c + dc) % kCols);
      }
    }
  }
  return out;
}

// Translate all channels so the player's head lands on the center cell.
inline StateTensor center_on_player(const StateTensor& t, CellIndex head,
                                    CellIndex center = kDefaultCenterCell) {
  GridCoord h = index_to_coord(head);
  GridCoord c = index_to_coord(center);
  return translate_torus(t, c.row - h.row, c.col - h.col);
}

inline StateTensor encode(const EncoderKind& kind, const GameState& s, const GameState* prev,
                          int player) {
  StateTensor t = kind.variant == EncoderVariant::Full17 ? encode_full(s, prev, player)
                                                         : encode_slim(s, player);
  if (kind.center_player && s.geese[player].alive)
    t = center_on_player(t, s.geese[player].head(), kind.center_cell);
  return t;
}

// Stack encoded states into a network batch (B, C, 7, 11).
inline Tensor stack_states(const std::vector<const StateTensor*>& states) {
  expects(!states.empty(), "stack_states: empty batch");
  const int C = states[0]->channels;
  Tensor t({static_cast<int>(states.size()), C, kRows, kCols});
  const size_t per = static_cast<size_t>(C) * kCells;
  for (size_t b = 0; b < states.size(); ++b) {
    expects(states[b]->channels == C, "stack_states: mixed channel counts");
    for (size_t i = 0; i < per; ++i)
      t.data[b * per + i] = static_cast<double>(states[b]->cells[i]);
  }
  return t;
}

}  // namespace gaggle
