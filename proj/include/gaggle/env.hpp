#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "gaggle/common.hpp"
#include "gaggle/grid.hpp"
#include "gaggle/rng.hpp"

namespace gaggle {

// Deterministic simulator of the Hungry Geese game: up to four geese on the
// 7x11 torus, growing by eating food, dying by collision or starvation.
//
// Step resolution, in order (all geese move simultaneously):
//   1. Every live goose's head moves one cell in its action direction, with
//      toroidal wrap.
//   2. A goose whose head lands on a food cell eats: the tail is retained
//      and the food cell is marked consumed. Several geese may consume the
//      same food in the same step; all of them grow.
//   3. Every goose that did not eat pops its tail cell.
//   4. Deaths are resolved simultaneously against the post-pop bodies of all
//      geese that entered the step alive (a goose dying this step still
//      blocks others this step):
//        - reverse: the goose had length >= 2 and its head landed on its own
//          neck (the cell behind the head);
//        - head-to-head: two or more heads share a cell (all involved die);
//        - body hit: a head lands on any non-head body cell of any goose,
//          its own included.
//      Dead bodies leave the board at the end of the step.
//   5. The step counter increments. If the new step count is a positive
//      multiple of hunger_rate, every surviving goose loses its tail cell;
//      a goose shrinking to length zero dies.
//   6. Consumed food is removed. Replacement food spawns uniformly over free
//      cells (no live body, no existing food), one draw per missing item,
//      until the configured food count is restored or no free cell remains.
//      Free cells are enumerated in ascending cell order and the state's own
//      generator supplies the draw, so trajectories are pure functions of
//      (seed, actions).
//   7. A live goose's cumulative reward becomes step + length; a dead
//      goose's reward stays frozen at the value it held while alive.
//
// The game is done when the step limit is reached, when nobody is alive, or
// (for games that started with 2+ geese) when at most one goose remains.
// Solo games run until the lone goose dies or the step limit hits.

struct EnvConfig {
  int num_geese = 4;
  int food_count = 2;
  int hunger_rate = 40;
  int max_steps = 200;
};

struct Goose {
  std::vector<CellIndex> body;  // head first
  bool alive = false;
  std::optional<Action> last_action;
  int reward = 0;  // cumulative env reward; frozen once dead

  int length() const { return static_cast<int>(body.size()); }
  CellIndex head() const {
    expects(!body.empty(), "Goose::head: goose has no body");
    return body.front();
  }
};

struct GameState {
  int step = 0;
  std::array<Goose, 4> geese;  // index 0 is the player by convention
  std::vector<CellIndex> food;  // kept sorted ascending
  SplitMix64 rng;
  EnvConfig config;

  int alive_count() const {
    int n = 0;
    for (const auto& g : geese) n += g.alive ? 1 : 0;
    return n;
  }

  bool done() const {
    if (step >= config.max_steps) return true;
    int alive = alive_count();
    if (alive == 0) return true;
    return config.num_geese >= 2 && alive <= 1;
  }
};

struct StepOutcome {
  GameState next;
  std::array<int, 4> env_reward{};   // cumulative, per goose
  std::array<bool, 4> newly_dead{};  // died during this step
  bool done = false;
};

namespace detail {

// Uniform draw from the cells not occupied by live bodies or food,
// enumerated ascending. Returns no value when the board is full.
inline std::optional<CellIndex> draw_free_cell(GameState& s) {
  std::array<bool, kCells> used{};
  for (const auto& g : s.geese)
    for (CellIndex c : g.body) used[c] = true;
  for (CellIndex c : s.food) used[c] = true;
  std::array<CellIndex, kCells> free{};
  int n = 0;
  for (CellIndex c = 0; c < kCells; ++c)
    if (!used[c]) free[n++] = c;
  if (n == 0) return std::nullopt;
  return free[s.rng.bounded(static_cast<uint32_t>(n))];
}

}  // namespace detail

inline GameState new_game(uint64_t seed, EnvConfig config) {
  if (config.num_geese < 1 || config.num_geese > 4)
    throw ConfigError("new_game: num_geese must be in [1,4]");
  if (config.food_count < 1) throw ConfigError("new_game: food_count must be >= 1");
  if (config.hunger_rate < 1) throw ConfigError("new_game: hunger_rate must be >= 1");
  if (config.max_steps < 1) throw ConfigError("new_game: max_steps must be >= 1");
  if (config.num_geese + config.food_count > kCells)
    throw ConfigError("new_game: board too small for geese + food");

  GameState s;
  s.config = config;
  s.rng = SplitMix64(seed);
  for (int g = 0; g < config.num_geese; ++g) {
    auto cell = detail::draw_free_cell(s);
    s.geese[g].body = {*cell};
    s.geese[g].alive = true;
    s.geese[g].reward = 1;  // step 0 + length 1
  }
  for (int i = 0; i < config.food_count; ++i) {
    auto cell = detail::draw_free_cell(s);
    if (!cell) break;
    s.food.push_back(*cell);
  }
  std::sort(s.food.begin(), s.food.end());
  return s;
}

inline GameState new_game(uint64_t seed, int num_geese = 4, int food_count = 2) {
  EnvConfig cfg;
  cfg.num_geese = num_geese;
  cfg.food_count = food_count;
  return new_game(seed, cfg);
}

// All four actions minus the reverse of the last action taken. Never empty.
inline std::vector<Action> legal_actions(const GameState& s, int g) {
  expects(g >= 0 && g < 4, "legal_actions: bad goose index");
  expects(s.geese[g].alive, "legal_actions: goose is dead");
  std::vector<Action> out;
  out.reserve(4);
  for (Action a : kAllActions) {
    if (s.geese[g].last_action && a == opposite(*s.geese[g].last_action)) continue;
    out.push_back(a);
  }
  return out;
}

inline StepOutcome step(const GameState& s, const std::array<std::optional<Action>, 4>& actions) {
  for (int g = 0; g < 4; ++g) {
    if (s.geese[g].alive && !actions[g])
      throw ContractViolation("step: missing action for a live goose");
    if (!s.geese[g].alive && actions[g])
      throw ContractViolation("step: action supplied for a dead goose");
  }

  StepOutcome out;
  out.next = s;
  GameState& n = out.next;

  std::array<bool, 4> entered_alive{};
  std::array<CellIndex, 4> new_head{};
  std::array<bool, 4> ate{};
  std::array<bool, 4> reversed{};
  std::vector<CellIndex> consumed;

  // 1-2: move heads, mark eaten food.
  for (int g = 0; g < 4; ++g) {
    if (!n.geese[g].alive) continue;
    entered_alive[g] = true;
    const Goose& goose = s.geese[g];
    new_head[g] = move_cell(goose.head(), *actions[g]);
    reversed[g] = goose.length() >= 2 && new_head[g] == goose.body[1];
    if (std::binary_search(n.food.begin(), n.food.end(), new_head[g])) {
      ate[g] = true;
      if (std::find(consumed.begin(), consumed.end(), new_head[g]) == consumed.end())
        consumed.push_back(new_head[g]);
    }
  }

  // 3: grow or advance.
  for (int g = 0; g < 4; ++g) {
    if (!entered_alive[g]) continue;
    auto& body = n.geese[g].body;
    body.insert(body.begin(), new_head[g]);
    if (!ate[g]) body.pop_back();
  }

  // 4: simultaneous deaths against post-pop occupancy.
  std::array<int, kCells> head_count{};
  std::array<bool, kCells> body_cell{};
  for (int g = 0; g < 4; ++g) {
    if (!entered_alive[g]) continue;
    const auto& body = n.geese[g].body;
    head_count[body[0]] += 1;
    for (size_t i = 1; i < body.size(); ++i) body_cell[body[i]] = true;
  }
  for (int g = 0; g < 4; ++g) {
    if (!entered_alive[g]) continue;
    bool dies = reversed[g] || head_count[new_head[g]] >= 2 || body_cell[new_head[g]];
    if (dies) {
      n.geese[g].body.clear();
      n.geese[g].alive = false;
      n.geese[g].last_action.reset();
      out.newly_dead[g] = true;
    } else {
      n.geese[g].last_action = *actions[g];
    }
  }

  // 5: step count and hunger.
  n.step = s.step + 1;
  if (n.step % n.config.hunger_rate == 0) {
    for (int g = 0; g < 4; ++g) {
      if (!n.geese[g].alive) continue;
      n.geese[g].body.pop_back();
      if (n.geese[g].body.empty()) {
        n.geese[g].alive = false;
        n.geese[g].last_action.reset();
        out.newly_dead[g] = true;
      }
    }
  }

  // 6: replace consumed food, topping up to the configured count.
  if (!consumed.empty()) {
    std::vector<CellIndex> remaining;
    remaining.reserve(n.food.size());
    for (CellIndex c : n.food)
      if (std::find(consumed.begin(), consumed.end(), c) == consumed.end())
        remaining.push_back(c);
    n.food = std::move(remaining);
  }
  while (static_cast<int>(n.food.size()) < n.config.food_count) {
    auto cell = detail::draw_free_cell(n);
    if (!cell) break;
    n.food.push_back(*cell);
    std::sort(n.food.begin(), n.food.end());
  }

  // 7: rewards.
  for (int g = 0; g < 4; ++g) {
    if (n.geese[g].alive) n.geese[g].reward = n.step + n.geese[g].length();
    out.env_reward[g] = n.geese[g].reward;
  }

  out.done = n.done();
  return out;
}

}  // namespace gaggle
