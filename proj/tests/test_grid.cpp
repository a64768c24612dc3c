#include <doctest.h>

#include "gaggle/grid.hpp"

using namespace gaggle;

TEST_CASE("index/coord conversion") {
  CHECK(index_to_coord(76) == GridCoord{6, 10});
  CHECK(index_to_coord(0) == GridCoord{0, 0});
  CHECK(index_to_coord(38) == GridCoord{3, 5});
  CHECK(coord_to_index({6, 10}) == 76);
  CHECK(coord_to_index({0, 0}) == 0);
  CHECK(coord_to_index({3, 5}) == 38);
  for (CellIndex i = 0; i < kCells; ++i) CHECK(coord_to_index(index_to_coord(i)) == i);
  CHECK_THROWS_AS(index_to_coord(77), ContractViolation);
  CHECK_THROWS_AS(index_to_coord(-1), ContractViolation);
  CHECK_THROWS_AS(coord_to_index({7, 0}), ContractViolation);
}

TEST_CASE("actions") {
  CHECK(opposite(Action::North) == Action::South);
  CHECK(opposite(Action::West) == Action::East);
  for (Action a : kAllActions) CHECK(opposite(opposite(a)) == a);
  // wrap on every edge
  CHECK(move_cell(coord_to_index({0, 0}), Action::North) == coord_to_index({6, 0}));
  CHECK(move_cell(coord_to_index({6, 0}), Action::South) == coord_to_index({0, 0}));
  CHECK(move_cell(coord_to_index({0, 0}), Action::West) == coord_to_index({0, 10}));
  CHECK(move_cell(coord_to_index({0, 10}), Action::East) == coord_to_index({0, 0}));
  for (CellIndex i = 0; i < kCells; ++i)
    for (Action a : kAllActions) CHECK(move_cell(move_cell(i, a), opposite(a)) == i);
}

TEST_CASE("toroidal distance") {
  CHECK(toroidal_distance(5, 5) == 0);
  CHECK(toroidal_distance(coord_to_index({0, 0}), coord_to_index({6, 10})) == 2);

  // brute-force extremes and metric axioms over all pairs
  int max_d = 0;
  for (CellIndex a = 0; a < kCells; ++a) {
    for (CellIndex b = 0; b < kCells; ++b) {
      int d = toroidal_distance(a, b);
      max_d = std::max(max_d, d);
      CHECK(d == toroidal_distance(b, a));
      CHECK((d == 0) == (a == b));
    }
  }
  CHECK(max_d == 8);
  CHECK(max_d == kMaxToroidalDistance);

  // triangle inequality, sampled
  for (CellIndex a = 0; a < kCells; a += 3)
    for (CellIndex b = 1; b < kCells; b += 5)
      for (CellIndex c = 2; c < kCells; c += 7)
        CHECK(toroidal_distance(a, c) <= toroidal_distance(a, b) + toroidal_distance(b, c));

  // single moves change distance by exactly 1 to the start cell
  for (CellIndex a = 0; a < kCells; ++a)
    for (Action act : kAllActions) CHECK(toroidal_distance(a, move_cell(a, act)) == 1);
}
