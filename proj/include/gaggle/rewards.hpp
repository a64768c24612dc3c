#pragma once

#include <limits>

#include "gaggle/common.hpp"
#include "gaggle/env.hpp"
#include "gaggle/grid.hpp"

namespace gaggle {

enum class ShaperKind { VanillaDelta, DqnTraining, ManhattanShaped };

struct ShaperParams {
  double eat_bonus = 50.0;        // event reward: player length increased
  double death_penalty = 1000.0;  // event penalty: player died this step
  double win_bonus = 1000.0;      // event reward: every enemy dead, player alive
  double milestone_bonus = 50.0;  // event reward: step hit a milestone multiple
  double survive_bonus = 10.0;    // fallback reward when no event fired
  int milestone_period = 100;
  double manhattan_eat_bonus = 500.0;
  int max_food_distance = kMaxToroidalDistance;  // 8 on the 7x11 torus
  // Keep the distance branch exactly as the source pseudocode prints it
  // (rewards moving away quadratically). Off by default; the prose direction
  // (closer => quadratic gain) is the shipped behavior.
  bool manhattan_printed_branch = false;
};

// One step of the player's episode: prev -> next under a single env step.
struct StepContext {
  const GameState& prev;
  const GameState& next;
  int player = 0;
  int env_reward_delta = 0;
};

inline StepContext make_context(const GameState& prev, const GameState& next, int player) {
  expects(player >= 0 && player < 4, "make_context: bad player index");
  return {prev, next, player, next.geese[player].reward - prev.geese[player].reward};
}

// Difference of the cumulative env reward (step + length while alive, frozen
// at death). Telescopes over an episode to final minus initial reward.
inline double vanilla_delta(const StepContext& ctx) {
  return static_cast<double>(ctx.next.geese[ctx.player].reward -
                             ctx.prev.geese[ctx.player].reward);
}

// Event-interpreted training reward: eat, die, win, milestone step, else a
// small survive bonus. Simultaneous events sum; the survive bonus only fires
// when nothing else did.
inline double dqn_training_reward(const StepContext& ctx, const ShaperParams& p) {
  const Goose& before = ctx.prev.geese[ctx.player];
  const Goose& after = ctx.next.geese[ctx.player];
  if (!before.alive) return 0.0;

  bool died = !after.alive;
  bool ate = after.alive && after.length() > before.length();
  bool enemies_existed = ctx.next.config.num_geese >= 2;
  bool won = after.alive && enemies_existed;
  for (int g = 0; won && g < 4; ++g)
    if (g != ctx.player && ctx.next.geese[g].alive) won = false;
  bool milestone = ctx.next.step > 0 && ctx.next.step % p.milestone_period == 0;

  double r = 0.0;
  bool any = false;
  if (ate) {
    r += p.eat_bonus;
    any = true;
  }
  if (died) {
    r -= p.death_penalty;
    any = true;
  }
  if (won) {
    r += p.win_bonus;
    any = true;
  }
  if (milestone) {
    r += p.milestone_bonus;
    any = true;
  }
  if (!any && after.alive) r += p.survive_bonus;
  return r;
}

namespace detail {
inline int min_food_distance(CellIndex head, const std::vector<CellIndex>& food) {
  int best = std::numeric_limits<int>::max();
  for (CellIndex f : food) best = std::min(best, toroidal_distance(head, f));
  return best;
}
}  // namespace detail

// Distance-shaped reward: death is a flat penalty, growth a flat bonus, and
// the approach term pays (max_dist - d)^2 for closing in on the nearest food
// versus a linear -(max_dist - d) for not doing so.
inline double manhattan_reward(const StepContext& ctx, const ShaperParams& p) {
  const Goose& before = ctx.prev.geese[ctx.player];
  const Goose& after = ctx.next.geese[ctx.player];
  if (!before.alive) return 0.0;
  if (!after.alive) return -p.death_penalty;

  double r = 0.0;
  if (after.length() > before.length()) r += p.manhattan_eat_bonus;

  expects(!ctx.prev.food.empty() && !ctx.next.food.empty(),
          "manhattan_reward: empty food set");
  int d_last = detail::min_food_distance(before.head(), ctx.prev.food);
  int d_cur = detail::min_food_distance(after.head(), ctx.next.food);
  bool quadratic = p.manhattan_printed_branch ? d_cur > d_last : d_cur < d_last;
  double gap = static_cast<double>(p.max_food_distance - d_cur);
  r += quadratic ? gap * gap : -gap;
  return r;
}

inline double shape(ShaperKind kind, const StepContext& ctx, const ShaperParams& p) {
  switch (kind) {
    case ShaperKind::VanillaDelta: return vanilla_delta(ctx);
    case ShaperKind::DqnTraining: return dqn_training_reward(ctx, p);
    case ShaperKind::ManhattanShaped: return manhattan_reward(ctx, p);
  }
  throw ConfigError("shape: unknown shaper kind");
}

}  // namespace gaggle
