#include <doctest.h>

#include <set>

#include "gaggle/env.hpp"
#include "support/oracle_env.hpp"
#include "support/stats.hpp"

using namespace gaggle;

namespace {

std::array<std::optional<Action>, 4> acts(std::initializer_list<std::pair<int, Action>> list) {
  std::array<std::optional<Action>, 4> a;
  for (auto& [g, act] : list) a[g] = act;
  return a;
}

// Hand-built state: bodies listed head-first, remaining fields defaulted.
GameState make_state(std::vector<std::vector<CellIndex>> bodies, std::vector<CellIndex> food,
                     int step = 0, EnvConfig cfg = {}) {
  GameState s;
  cfg.num_geese = static_cast<int>(bodies.size());
  cfg.food_count = std::max<int>(1, static_cast<int>(food.size()));
  s.config = cfg;
  s.step = step;
  s.food = std::move(food);
  std::sort(s.food.begin(), s.food.end());
  s.rng = SplitMix64(99);
  for (size_t g = 0; g < bodies.size(); ++g) {
    s.geese[g].body = std::move(bodies[g]);
    s.geese[g].alive = !s.geese[g].body.empty();
    if (s.geese[g].alive) s.geese[g].reward = step + s.geese[g].length();
  }
  return s;
}

}  // namespace

TEST_CASE("new_game basics") {
  GameState a = new_game(123, 4, 2);
  GameState b = new_game(123, 4, 2);
  CHECK(a.step == 0);
  CHECK(a.alive_count() == 4);
  CHECK(a.food.size() == 2);

  // determinism
  CHECK(a.rng.state == b.rng.state);
  for (int g = 0; g < 4; ++g) CHECK(a.geese[g].body == b.geese[g].body);
  CHECK(a.food == b.food);

  // distinct single-cell bodies, food on free cells, reward = step + length
  std::set<CellIndex> cells;
  for (int g = 0; g < 4; ++g) {
    CHECK(a.geese[g].length() == 1);
    CHECK(a.geese[g].reward == 1);
    cells.insert(a.geese[g].head());
  }
  CHECK(cells.size() == 4);
  for (CellIndex f : a.food) CHECK(cells.count(f) == 0);

  CHECK_THROWS_AS(new_game(1, 0, 2), ConfigError);
  CHECK_THROWS_AS(new_game(1, 5, 2), ConfigError);
  CHECK_THROWS_AS(new_game(1, 4, 0), ConfigError);
  CHECK_THROWS_AS(new_game(1, 4, 76), ConfigError);
}

TEST_CASE("new_game head positions are uniform") {
  std::vector<long> counts(kCells, 0);
  const int n = 100000;
  for (int seed = 1; seed <= n; ++seed) counts[new_game(seed, 4, 2).geese[0].head()] += 1;
  double p = teststats::chi2_pvalue(teststats::chi2_uniform(counts), kCells - 1);
  CHECK(p > 0.01);
}

TEST_CASE("legal_actions") {
  GameState s = new_game(7, 4, 2);
  CHECK(legal_actions(s, 0).size() == 4);  // no history yet

  std::array<std::optional<Action>, 4> a;
  for (int g = 0; g < 4; ++g) a[g] = legal_actions(s, g).front();
  StepOutcome out = step(s, a);
  for (int g = 0; g < 4; ++g) {
    if (!out.next.geese[g].alive) continue;
    auto legal = legal_actions(out.next, g);
    CHECK(legal.size() == 3);
    for (Action act : legal) CHECK(act != opposite(*out.next.geese[g].last_action));
  }

  GameState dead = make_state({{5}, {}}, {30});
  CHECK_THROWS_AS(legal_actions(dead, 1), ContractViolation);
}

TEST_CASE("step: lone goose cumulative reward follows step + length") {
  EnvConfig cfg;
  cfg.num_geese = 1;
  GameState s = new_game(11, cfg);
  for (int i = 0; i < 30 && !s.done(); ++i) {
    auto legal = legal_actions(s, 0);
    StepOutcome out = step(s, acts({{0, legal.front()}}));
    if (!out.next.geese[0].alive) break;
    CHECK(out.env_reward[0] == out.next.step + out.next.geese[0].length());
    CHECK(out.env_reward[0] >= s.geese[0].reward);  // non-decreasing while alive
    s = out.next;
  }
}

TEST_CASE("step: head-to-head kills both") {
  // two length-1 geese two cells apart move onto the middle cell
  GameState s = make_state({{coord_to_index({3, 4})}, {coord_to_index({3, 6})}}, {0});
  StepOutcome out = step(s, acts({{0, Action::East}, {1, Action::West}}));
  CHECK(out.newly_dead[0]);
  CHECK(out.newly_dead[1]);
  CHECK(out.next.alive_count() == 0);
  CHECK(out.done);
}

TEST_CASE("step: adjacent length-1 geese pass through each other") {
  GameState s = make_state({{coord_to_index({3, 4})}, {coord_to_index({3, 5})}}, {0});
  StepOutcome out = step(s, acts({{0, Action::East}, {1, Action::West}}));
  CHECK(out.next.geese[0].alive);
  CHECK(out.next.geese[1].alive);
  CHECK(out.next.geese[0].head() == coord_to_index({3, 5}));
  CHECK(out.next.geese[1].head() == coord_to_index({3, 4}));
}

TEST_CASE("step: eating grows and food is restored") {
  GameState s = make_state({{coord_to_index({2, 2})}}, {coord_to_index({2, 3}), 70});
  StepOutcome out = step(s, acts({{0, Action::East}}));
  CHECK(out.next.geese[0].length() == 2);
  CHECK(out.next.food.size() == 2);  // replacement spawned
  for (CellIndex f : out.next.food) {
    CHECK(f != coord_to_index({2, 3}));  // eaten cell removed
    for (CellIndex c : out.next.geese[0].body) CHECK(f != c);
  }
}

TEST_CASE("step: reverse into own neck dies") {
  GameState s = make_state({{coord_to_index({2, 3}), coord_to_index({2, 2})}}, {70});
  s.geese[0].last_action = Action::East;
  StepOutcome out = step(s, acts({{0, Action::West}}));
  CHECK(out.newly_dead[0]);
  CHECK_FALSE(out.next.geese[0].alive);
}

TEST_CASE("step: reverse as length-1 is just a move") {
  GameState s = make_state({{coord_to_index({2, 3})}}, {70});
  s.config.num_geese = 1;
  s.geese[0].last_action = Action::East;
  StepOutcome out = step(s, acts({{0, Action::West}}));
  CHECK(out.next.geese[0].alive);
  CHECK(out.next.geese[0].head() == coord_to_index({2, 2}));
}

TEST_CASE("step: hunger pops a tail cell and starves length-1 geese") {
  EnvConfig cfg;
  cfg.num_geese = 1;
  cfg.hunger_rate = 3;
  GameState s = make_state({{coord_to_index({2, 3})}}, {70}, 2, cfg);
  StepOutcome out = step(s, acts({{0, Action::East}}));  // step becomes 3
  CHECK(out.newly_dead[0]);
  CHECK(out.next.alive_count() == 0);
}

TEST_CASE("step: contract violations") {
  GameState s = make_state({{10}, {20}}, {30});
  CHECK_THROWS_AS(step(s, acts({{0, Action::North}})), ContractViolation);  // missing for live
  GameState d = make_state({{10}, {}}, {30});
  CHECK_THROWS_AS(step(d, acts({{0, Action::North}, {1, Action::North}})), ContractViolation);
}

TEST_CASE("step: frozen reward after death") {
  GameState s = make_state({{coord_to_index({2, 3}), coord_to_index({2, 2})}, {40, 41}}, {70}, 9);
  s.geese[0].last_action = Action::East;
  int before = s.geese[0].reward;
  StepOutcome out = step(s, acts({{0, Action::West}, {1, Action::West}}));  // goose 0 reverses
  REQUIRE(out.newly_dead[0]);
  REQUIRE(out.next.geese[1].alive);
  CHECK(out.env_reward[0] == before);
  // and it stays frozen on subsequent steps
  StepOutcome out2 = step(out.next, acts({{1, Action::West}}));
  CHECK(out2.env_reward[0] == before);
}

TEST_CASE("solo games run past one step") {
  EnvConfig cfg;
  cfg.num_geese = 1;
  GameState s = new_game(5, cfg);
  CHECK_FALSE(s.done());
  auto legal = legal_actions(s, 0);
  StepOutcome out = step(s, acts({{0, legal.front()}}));
  CHECK(out.done == (!out.next.geese[0].alive || out.next.step >= cfg.max_steps));
}

TEST_CASE("random-action episodes match the naive oracle") {
  SplitMix64 action_rng(2024);
  int episodes_checked = 0;
  for (int ep = 0; ep < 500; ++ep) {
    EnvConfig cfg;
    cfg.num_geese = 1 + static_cast<int>(action_rng.bounded(4));
    cfg.food_count = 1 + static_cast<int>(action_rng.bounded(3));
    cfg.hunger_rate = ep % 3 == 0 ? 5 : 40;
    cfg.max_steps = 60;
    GameState game = new_game(derive_seed(900, ep), cfg);
    oracle::OState os = oracle::from_game(game);
    REQUIRE(oracle::equal(os, game));
    while (!game.done()) {
      std::array<std::optional<Action>, 4> a;
      std::array<std::optional<int>, 4> dirs;
      for (int g = 0; g < 4; ++g) {
        if (!game.geese[g].alive) continue;
        int dir = static_cast<int>(action_rng.bounded(4));  // reverse moves included
        a[g] = static_cast<Action>(dir);
        dirs[g] = dir;
      }
      StepOutcome out = step(game, a);
      oracle::ostep(os, dirs);
      game = out.next;
      REQUIRE(oracle::equal(os, game));

      // occupancy: live cells pairwise disjoint and disjoint from food
      std::set<CellIndex> seen;
      for (int g = 0; g < 4; ++g)
        for (CellIndex c : game.geese[g].body) {
          CHECK(seen.count(c) == 0);
          seen.insert(c);
        }
      for (CellIndex f : game.food) CHECK(seen.count(f) == 0);
    }
    ++episodes_checked;
  }
  CHECK(episodes_checked == 500);
}

TEST_CASE("length dynamics per step") {
  SplitMix64 rng(31);
  for (int ep = 0; ep < 100; ++ep) {
    GameState game = new_game(derive_seed(41, ep), 4, 2);
    while (!game.done()) {
      std::array<int, 4> len_before{};
      for (int g = 0; g < 4; ++g) len_before[g] = game.geese[g].length();
      std::array<std::optional<Action>, 4> a;
      for (int g = 0; g < 4; ++g)
        if (game.geese[g].alive) a[g] = static_cast<Action>(rng.bounded(4));
      StepOutcome out = step(game, a);
      bool hunger = out.next.step % game.config.hunger_rate == 0;
      for (int g = 0; g < 4; ++g) {
        if (len_before[g] == 0) continue;
        int len_after = out.next.geese[g].length();
        if (len_after == 0) continue;  // death handled separately
        int delta = len_after - len_before[g];
        if (hunger)
          CHECK((delta == 0 || delta == -1 || delta == 1));
        else
          CHECK((delta == 0 || delta == 1));
      }
      game = out.next;
    }
  }
}
