#include <doctest.h>

#include "gaggle/env.hpp"
#include "gaggle/rewards.hpp"

using namespace gaggle;

namespace {

GameState make_state(std::vector<std::vector<CellIndex>> bodies, std::vector<CellIndex> food,
                     int step = 0, EnvConfig cfg = {}) {
  GameState s;
  cfg.num_geese = static_cast<int>(bodies.size());
  cfg.food_count = std::max<int>(1, static_cast<int>(food.size()));
  s.config = cfg;
  s.step = step;
  s.food = std::move(food);
  std::sort(s.food.begin(), s.food.end());
  s.rng = SplitMix64(5);
  for (size_t g = 0; g < bodies.size(); ++g) {
    s.geese[g].body = std::move(bodies[g]);
    s.geese[g].alive = !s.geese[g].body.empty();
    if (s.geese[g].alive) s.geese[g].reward = step + s.geese[g].length();
  }
  return s;
}

std::array<std::optional<Action>, 4> acts(std::initializer_list<std::pair<int, Action>> list) {
  std::array<std::optional<Action>, 4> a;
  for (auto& [g, act] : list) a[g] = act;
  return a;
}

const ShaperParams kDefaults{};

}  // namespace

TEST_CASE("vanilla delta") {
  // survive without eating: ((i+1) + len) - (i + len) = 1
  GameState prev = make_state({{coord_to_index({2, 2}), coord_to_index({2, 1})}, {60}}, {40}, 5);
  StepOutcome out = step(prev, acts({{0, Action::East}, {1, Action::North}}));
  REQUIRE(out.next.geese[0].alive);
  CHECK(vanilla_delta(make_context(prev, out.next, 0)) == doctest::Approx(1.0));

  // eat at step i, len 1 -> 2: (i+2) - ((i-1)+1) = 2
  GameState before = make_state({{coord_to_index({2, 2})}, {60}}, {coord_to_index({2, 3}), 70}, 7);
  StepOutcome ate = step(before, acts({{0, Action::East}, {1, Action::North}}));
  REQUIRE(ate.next.geese[0].length() == 2);
  CHECK(vanilla_delta(make_context(before, ate.next, 0)) == doctest::Approx(2.0));

  // dead before and after: 0
  GameState d0 = make_state({{}, {60}}, {40}, 3);
  GameState d1 = make_state({{}, {61, 60}}, {40}, 4);
  CHECK(vanilla_delta({d0, d1, 0, 0}) == doctest::Approx(0.0));

  // death step: frozen reward, delta 0
  GameState rev = make_state({{coord_to_index({2, 3}), coord_to_index({2, 2})}, {60}}, {40}, 9);
  rev.geese[0].last_action = Action::East;
  StepOutcome died = step(rev, acts({{0, Action::West}, {1, Action::North}}));
  REQUIRE_FALSE(died.next.geese[0].alive);
  CHECK(vanilla_delta(make_context(rev, died.next, 0)) == doctest::Approx(0.0));
}

TEST_CASE("vanilla delta telescopes over an episode") {
  for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    GameState game = new_game(seed, 4, 2);
    SplitMix64 rng(seed * 31);
    double sum = 0.0;
    int initial = game.geese[0].reward;
    while (!game.done()) {
      std::array<std::optional<Action>, 4> a;
      for (int g = 0; g < 4; ++g) {
        if (!game.geese[g].alive) continue;
        auto legal = legal_actions(game, g);
        a[g] = legal[rng.bounded(static_cast<uint32_t>(legal.size()))];
      }
      StepOutcome out = step(game, a);
      sum += vanilla_delta(make_context(game, out.next, 0));
      game = out.next;
    }
    CHECK(sum == doctest::Approx(game.geese[0].reward - initial));
  }
}

TEST_CASE("dqn training reward events") {
  // plain survival: +10
  GameState prev = make_state({{10}, {60}}, {40}, 3);
  StepOutcome out = step(prev, acts({{0, Action::East}, {1, Action::North}}));
  REQUIRE(out.next.geese[0].alive);
  CHECK(dqn_training_reward(make_context(prev, out.next, 0), kDefaults) == doctest::Approx(10.0));

  // death: -1000
  GameState rev = make_state({{coord_to_index({2, 3}), coord_to_index({2, 2})}, {60}}, {40}, 5);
  rev.geese[0].last_action = Action::East;
  StepOutcome died = step(rev, acts({{0, Action::West}, {1, Action::North}}));
  REQUIRE_FALSE(died.next.geese[0].alive);
  CHECK(dqn_training_reward(make_context(rev, died.next, 0), kDefaults) ==
        doctest::Approx(-1000.0));

  // eat alone: +50
  GameState b = make_state({{coord_to_index({2, 2})}, {60}}, {coord_to_index({2, 3}), 70}, 3);
  StepOutcome ate = step(b, acts({{0, Action::East}, {1, Action::North}}));
  REQUIRE(ate.next.geese[0].length() == 2);
  CHECK(dqn_training_reward(make_context(b, ate.next, 0), kDefaults) == doctest::Approx(50.0));

  // milestone step alone: +50, no survive bonus on top
  GameState m = make_state({{10}, {60}}, {40}, 99);
  StepOutcome mo = step(m, acts({{0, Action::East}, {1, Action::North}}));
  REQUIRE(mo.next.step == 100);
  CHECK(dqn_training_reward(make_context(m, mo.next, 0), kDefaults) == doctest::Approx(50.0));

  // eat on step 100 while the last enemy dies: 50 + 50 + 1000
  GameState big = make_state(
      {{coord_to_index({2, 2})}, {coord_to_index({5, 6}), coord_to_index({5, 5})}},
      {coord_to_index({2, 3}), 70}, 99);
  big.geese[1].last_action = Action::East;
  StepOutcome all = step(big, acts({{0, Action::East}, {1, Action::West}}));  // enemy reverses
  REQUIRE(all.next.step == 100);
  REQUIRE(all.next.geese[0].length() == 2);
  REQUIRE_FALSE(all.next.geese[1].alive);
  CHECK(dqn_training_reward(make_context(big, all.next, 0), kDefaults) == doctest::Approx(1100.0));

  // solo game: no vacuous win bonus
  EnvConfig solo_cfg;
  solo_cfg.num_geese = 1;
  GameState solo = make_state({{10}}, {40}, 3, solo_cfg);
  StepOutcome so = step(solo, acts({{0, Action::East}}));
  CHECK(dqn_training_reward(make_context(solo, so.next, 0), kDefaults) == doctest::Approx(10.0));

  // dead before the step: 0
  GameState d0 = make_state({{}, {60}}, {40}, 3);
  GameState d1 = make_state({{}, {61, 60}}, {40}, 4);
  CHECK(dqn_training_reward({d0, d1, 0, 0}, kDefaults) == doctest::Approx(0.0));
}

TEST_CASE("manhattan reward branches") {
  // death: flat -1000, no distance terms
  GameState rev = make_state({{coord_to_index({2, 3}), coord_to_index({2, 2})}, {60}}, {40}, 5);
  rev.geese[0].last_action = Action::East;
  StepOutcome died = step(rev, acts({{0, Action::West}, {1, Action::North}}));
  CHECK(manhattan_reward(make_context(rev, died.next, 0), kDefaults) == doctest::Approx(-1000.0));

  // moved closer, d' = 3 -> d = 2: +(8-2)^2 = 36
  GameState p = make_state({{coord_to_index({2, 2})}, {coord_to_index({6, 0})}},
                           {coord_to_index({2, 5})}, 3);
  REQUIRE(toroidal_distance(p.geese[0].head(), p.food[0]) == 3);
  StepOutcome closer = step(p, acts({{0, Action::East}, {1, Action::North}}));
  REQUIRE(toroidal_distance(closer.next.geese[0].head(), closer.next.food[0]) == 2);
  CHECK(manhattan_reward(make_context(p, closer.next, 0), kDefaults) == doctest::Approx(36.0));

  // moved away, d' = 2 -> d = 3: -(8-3) = -5
  GameState q = make_state({{coord_to_index({2, 3})}, {coord_to_index({6, 0})}},
                           {coord_to_index({2, 5})}, 3);
  REQUIRE(toroidal_distance(q.geese[0].head(), q.food[0]) == 2);
  StepOutcome away = step(q, acts({{0, Action::West}, {1, Action::North}}));
  REQUIRE(toroidal_distance(away.next.geese[0].head(), away.next.food[0]) == 3);
  CHECK(manhattan_reward(make_context(q, away.next, 0), kDefaults) == doctest::Approx(-5.0));

  // printed-branch compatibility flag flips the distance branch
  ShaperParams printed = kDefaults;
  printed.manhattan_printed_branch = true;
  CHECK(manhattan_reward(make_context(q, away.next, 0), printed) == doctest::Approx(25.0));
  CHECK(manhattan_reward(make_context(p, closer.next, 0), printed) == doctest::Approx(-6.0));

  // equal distance lands in the penalty branch (wraparound keeps d at 5)
  GameState e = make_state({{coord_to_index({2, 2})}, {coord_to_index({6, 0})}},
                           {coord_to_index({2, 7})}, 3);
  REQUIRE(toroidal_distance(e.geese[0].head(), e.food[0]) == 5);
  StepOutcome eq = step(e, acts({{0, Action::West}, {1, Action::North}}));
  REQUIRE(toroidal_distance(eq.next.geese[0].head(), eq.next.food[0]) == 5);
  CHECK(manhattan_reward(make_context(e, eq.next, 0), kDefaults) == doctest::Approx(-3.0));
}

TEST_CASE("manhattan approach bonus grows quadratically as distance shrinks") {
  for (int d = 0; d < kMaxToroidalDistance; ++d) {
    double bonus_d = (8.0 - d) * (8.0 - d);
    double bonus_next = (8.0 - (d + 1)) * (8.0 - (d + 1));
    CHECK(bonus_d > bonus_next);
  }
}

TEST_CASE("manhattan reward bounded on non-death steps") {
  SplitMix64 rng(73);
  for (int ep = 0; ep < 120; ++ep) {
    GameState game = new_game(derive_seed(500, ep), 4, 2);
    while (!game.done()) {
      std::array<std::optional<Action>, 4> a;
      for (int g = 0; g < 4; ++g) {
        if (!game.geese[g].alive) continue;
        auto legal = legal_actions(game, g);
        a[g] = legal[rng.bounded(static_cast<uint32_t>(legal.size()))];
      }
      StepOutcome out = step(game, a);
      if (game.geese[0].alive && out.next.geese[0].alive) {
        double r = manhattan_reward(make_context(game, out.next, 0), kDefaults);
        CHECK(r >= -8.0);
        CHECK(r <= 564.0);
      }
      game = out.next;
    }
  }
}

TEST_CASE("shape dispatch") {
  GameState prev = make_state({{10}, {60}}, {40}, 3);
  StepOutcome out = step(prev, acts({{0, Action::East}, {1, Action::North}}));
  StepContext ctx = make_context(prev, out.next, 0);
  CHECK(shape(ShaperKind::VanillaDelta, ctx, kDefaults) == vanilla_delta(ctx));
  CHECK(shape(ShaperKind::DqnTraining, ctx, kDefaults) == dqn_training_reward(ctx, kDefaults));
  CHECK(shape(ShaperKind::ManhattanShaped, ctx, kDefaults) == manhattan_reward(ctx, kDefaults));

  GameState rev = make_state({{coord_to_index({2, 3}), coord_to_index({2, 2})}, {60}}, {40}, 5);
  rev.geese[0].last_action = Action::East;
  StepOutcome died = step(rev, acts({{0, Action::West}, {1, Action::North}}));
  CHECK(shape(ShaperKind::ManhattanShaped, make_context(rev, died.next, 0), kDefaults) ==
        doctest::Approx(-1000.0));
}
