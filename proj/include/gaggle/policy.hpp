#pragma once

#include <array>
#include <limits>
#include <vector>

#include "gaggle/common.hpp"
#include "gaggle/encoding.hpp"
#include "gaggle/env.hpp"
#include "gaggle/models.hpp"
#include "gaggle/rng.hpp"

namespace gaggle {

// Linear epsilon decay, clamped at eps_end after decay_steps.
struct EpsilonSchedule {
  double eps_start = 1.0;
  double eps_end = 0.05;
  int64_t decay_steps = 1;

  double at(int64_t t) const {
    if (decay_steps <= 0 || t >= decay_steps) return eps_end;
    if (t <= 0) return eps_start;
    double frac = static_cast<double>(t) / static_cast<double>(decay_steps);
    return eps_start + (eps_end - eps_start) * frac;
  }
};

enum class ExploreSource { Random, RuleBased };

inline Action random_legal(const GameState& s, int g, SplitMix64& rng) {
  auto legal = legal_actions(s, g);
  return legal[rng.bounded(static_cast<uint32_t>(legal.size()))];
}

// Rule-based baseline: among legal moves whose destination cannot hold a
// body cell after everyone's tail pops, walk toward the nearest food.
// Ties break in N,E,S,W order; if every move is lethal, take the first
// legal one.
inline Action greedy_agent(const GameState& s, int g) {
  expects(s.geese[g].alive, "greedy_agent: goose is dead");
  std::array<bool, kCells> blocked{};
  for (const Goose& goose : s.geese) {
    if (!goose.alive) continue;
    for (int i = 0; i + 1 < goose.length(); ++i) blocked[goose.body[i]] = true;
  }
  auto legal = legal_actions(s, g);
  Action best = legal.front();
  int best_dist = std::numeric_limits<int>::max();
  for (Action a : legal) {
    CellIndex dest = move_cell(s.geese[g].head(), a);
    if (blocked[dest]) continue;
    int d = std::numeric_limits<int>::max() - 1;
    for (CellIndex f : s.food) d = std::min(d, toroidal_distance(dest, f));
    if (d < best_dist) {
      best_dist = d;
      best = a;
    }
  }
  return best;
}

// Masked greedy action: argmax of Q over the legal set, ties to the lowest
// action index.
inline Action greedy_from_q(QNetwork& net, const StateTensor& s, const std::vector<Action>& legal) {
  expects(!legal.empty(), "greedy_from_q: empty legal set");
  std::vector<const StateTensor*> one = {&s};
  Tensor q = net.forward(stack_states(one), /*training=*/false);
  double best = -std::numeric_limits<double>::infinity();
  Action pick = legal.front();
  for (Action a : kAllActions) {
    bool ok = false;
    for (Action l : legal) ok = ok || l == a;
    if (!ok) continue;
    double v = q.data[static_cast<size_t>(a)];
    if (v > best) {
      best = v;
      pick = a;
    }
  }
  return pick;
}

// Epsilon-greedy behavior policy. Exploration draws either a uniform legal
// action or the rule-based agent's action; the rule-based source needs the
// game state the tensor was encoded from.
inline Action epsilon_greedy(QNetwork& net, const StateTensor& s, const std::vector<Action>& legal,
                             double eps, SplitMix64& rng, ExploreSource source,
                             const GameState* state = nullptr, int player = 0) {
  expects(!legal.empty(), "epsilon_greedy: empty legal set");
  if (eps > 0.0 && rng.coin(eps)) {
    if (source == ExploreSource::RuleBased) {
      expects(state != nullptr, "epsilon_greedy: rule-based exploration needs the game state");
      return greedy_agent(*state, player);
    }
    return legal[rng.bounded(static_cast<uint32_t>(legal.size()))];
  }
  return greedy_from_q(net, s, legal);
}

}  // namespace gaggle
