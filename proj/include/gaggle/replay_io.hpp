#pragma once

#include <array>
#include <optional>
#include <ostream>

#include <json.hpp>

#include "gaggle/env.hpp"
#include "gaggle/eval.hpp"

namespace gaggle {

// One replay line: the state after a step plus the actions that produced it.
// Keys and layout are part of the on-disk contract:
//   {step, geese: [[cell,...] x4], food: [cell,...],
//    actions: [string x4], rewards: [int x4]}
inline nlohmann::json replay_line(const GameState& s,
                                  const std::array<std::optional<Action>, 4>& actions) {
  nlohmann::json j;
  j["step"] = s.step;
  nlohmann::json geese = nlohmann::json::array();
  nlohmann::json acts = nlohmann::json::array();
  nlohmann::json rewards = nlohmann::json::array();
  for (int g = 0; g < 4; ++g) {
    geese.push_back(s.geese[g].body);
    acts.push_back(actions[g] ? action_name(*actions[g]) : "NONE");
    rewards.push_back(s.geese[g].reward);
  }
  j["geese"] = geese;
  j["food"] = s.food;
  j["actions"] = acts;
  j["rewards"] = rewards;
  return j;
}

// Plays one seeded match and writes it as JSON-lines, one line per state
// starting with the initial one. Returns the match result.
inline MatchResult export_episode(std::ostream& os, const std::array<PolicyAgent*, 4>& agents,
                                  uint64_t seed, const EnvConfig& cfg) {
  GameState game = new_game(seed, cfg);
  std::optional<GameState> prev;
  SplitMix64 policy_rng(derive_seed(seed, 0x9a11));
  MatchResult m;
  os << replay_line(game, {}).dump() << "\n";
  while (!game.done()) {
    std::array<std::optional<Action>, 4> actions;
    for (int g = 0; g < cfg.num_geese; ++g) {
      if (!game.geese[g].alive) continue;
      actions[g] = agents[g]->act(game, prev ? &*prev : nullptr, g, policy_rng);
    }
    StepOutcome out = step(game, actions);
    os << replay_line(out.next, actions).dump() << "\n";
    prev = std::move(game);
    game = std::move(out.next);
    m.steps = game.step;
    if (out.done) break;
  }
  for (int g = 0; g < 4; ++g) m.final_reward[g] = game.geese[g].reward;
  rank_match(m, cfg.num_geese);
  return m;
}

}  // namespace gaggle
