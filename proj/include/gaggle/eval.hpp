#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gaggle/common.hpp"
#include "gaggle/env.hpp"
#include "gaggle/policy.hpp"
#include "gaggle/rng.hpp"

namespace gaggle {

// A seat-independent match policy. prev is the pre-step state one step back
// (for encoders that want head history), null on the first step.
struct PolicyAgent {
  virtual ~PolicyAgent() = default;
  virtual std::string name() const = 0;
  virtual Action act(const GameState& s, const GameState* prev, int g, SplitMix64& rng) = 0;
};

struct GreedyPolicy final : PolicyAgent {
  std::string name() const override { return "greedy"; }
  Action act(const GameState& s, const GameState*, int g, SplitMix64&) override {
    return greedy_agent(s, g);
  }
};

struct RandomPolicy final : PolicyAgent {
  std::string name() const override { return "random"; }
  Action act(const GameState& s, const GameState*, int g, SplitMix64& rng) override {
    return random_legal(s, g, rng);
  }
};

// Greedy-from-Q policy over a frozen network.
struct NetPolicy final : PolicyAgent {
  QNetwork* net = nullptr;
  EncoderKind encoder;
  std::string label = "net";

  NetPolicy() = default;
  NetPolicy(QNetwork* n, EncoderKind e, std::string l) : net(n), encoder(e), label(std::move(l)) {}

  std::string name() const override { return label; }
  Action act(const GameState& s, const GameState* prev, int g, SplitMix64&) override {
    StateTensor enc = encode(encoder, s, prev, g);
    return greedy_from_q(*net, enc, legal_actions(s, g));
  }
};

struct MatchResult {
  std::array<int, 4> final_reward{};
  std::array<int, 4> rank{};  // 1..n, ties share the rank; 0 for absent geese
  int winner = -1;            // goose index of the unique rank-1 goose, -1 if tied
  int steps = 0;
};

// Competition ranking over the geese that played: rank = 1 + number of geese
// with a strictly higher final reward.
inline void rank_match(MatchResult& m, int num_geese) {
  for (int g = 0; g < num_geese; ++g) {
    int r = 1;
    for (int o = 0; o < num_geese; ++o)
      if (m.final_reward[o] > m.final_reward[g]) ++r;
    m.rank[g] = r;
  }
  int top = -1, top_count = 0;
  for (int g = 0; g < num_geese; ++g) {
    if (m.rank[g] == 1) {
      top = g;
      ++top_count;
    }
  }
  m.winner = top_count == 1 ? top : -1;
}

inline MatchResult play_match(const std::array<PolicyAgent*, 4>& agents, uint64_t seed,
                              const EnvConfig& cfg) {
  GameState game = new_game(seed, cfg);
  std::optional<GameState> prev;
  SplitMix64 policy_rng(derive_seed(seed, 0x9a11));
  MatchResult m;
  while (!game.done()) {
    std::array<std::optional<Action>, 4> actions;
    for (int g = 0; g < cfg.num_geese; ++g) {
      if (!game.geese[g].alive) continue;
      expects(agents[g] != nullptr, "play_match: missing agent for a live goose");
      actions[g] = agents[g]->act(game, prev ? &*prev : nullptr, g, policy_rng);
    }
    StepOutcome out = step(game, actions);
    prev = std::move(game);
    game = std::move(out.next);
    m.steps = game.step;
    if (out.done) break;
  }
  for (int g = 0; g < 4; ++g) m.final_reward[g] = game.geese[g].reward;
  rank_match(m, cfg.num_geese);
  return m;
}

struct TournamentResult {
  int n_games = 0;
  std::array<int, 4> wins{};
  std::array<double, 4> win_rate{};
  std::array<double, 4> mean_score{};
  std::array<int, 4> max_score{};
  std::vector<MatchResult> matches;
};

// n seeded matches with per-game seeds split off the master seed, so game i
// is reproducible in isolation and games could run in any order.
inline TournamentResult tournament(const std::array<PolicyAgent*, 4>& agents, int n_games,
                                   uint64_t seed, const EnvConfig& cfg) {
  expects(n_games >= 1, "tournament: n_games must be >= 1");
  TournamentResult res;
  res.n_games = n_games;
  res.matches.reserve(static_cast<size_t>(n_games));
  std::array<double, 4> score_sum{};
  for (int i = 0; i < n_games; ++i) {
    MatchResult m = play_match(agents, derive_seed(seed, static_cast<uint64_t>(i)), cfg);
    for (int g = 0; g < cfg.num_geese; ++g) {
      score_sum[g] += m.final_reward[g];
      res.max_score[g] = std::max(res.max_score[g], m.final_reward[g]);
    }
    if (m.winner >= 0) res.wins[m.winner] += 1;
    res.matches.push_back(m);
  }
  for (int g = 0; g < 4; ++g) {
    res.win_rate[g] = static_cast<double>(res.wins[g]) / n_games;
    res.mean_score[g] = score_sum[g] / n_games;
  }
  return res;
}

// ---- Elo -------------------------------------------------------------------

struct EloTable {
  double k_factor = 32.0;
  double initial = 1000.0;
  std::map<std::string, double> rating;
  std::map<std::string, int> games;

  double get(const std::string& name) const {
    auto it = rating.find(name);
    return it == rating.end() ? initial : it->second;
  }
  void ensure(const std::string& name) {
    rating.try_emplace(name, initial);
    games.try_emplace(name, 0);
  }
};

inline double elo_expected(double ra, double rb) {
  return 1.0 / (1.0 + std::pow(10.0, (rb - ra) / 400.0));
}

// Decomposes a 4-player result into the 6 pairwise outcomes by rank (win,
// loss, or draw) and applies standard logistic updates in fixed (i,j) order.
// Each pairwise update is zero-sum, so the total rating mass is conserved.
inline void elo_update(EloTable& table, const std::array<std::string, 4>& names,
                       const MatchResult& m, int num_geese = 4) {
  for (int g = 0; g < num_geese; ++g) {
    if (table.rating.find(names[g]) == table.rating.end())
      throw ContractViolation("elo_update: unknown agent " + names[g]);
  }
  for (int i = 0; i < num_geese; ++i) {
    for (int j = i + 1; j < num_geese; ++j) {
      if (names[i] == names[j]) continue;  // same rated identity on both seats
      double si = m.rank[i] < m.rank[j] ? 1.0 : (m.rank[i] > m.rank[j] ? 0.0 : 0.5);
      double ri = table.rating[names[i]];
      double rj = table.rating[names[j]];
      double ei = elo_expected(ri, rj);
      double delta = table.k_factor * (si - ei);
      table.rating[names[i]] = ri + delta;
      table.rating[names[j]] = rj - delta;
    }
  }
  for (int g = 0; g < num_geese; ++g) table.games[names[g]] += 1;
}

}  // namespace gaggle
