#include <gtest/gtest.h>

#include <set>

#include "test_util.hpp"

using namespace semsearch;
using namespace semsearch::testing;

namespace {

BeliefDelta reveal_all(const Scenario& s) {
  BeliefDelta d;
  for (int y = 0; y < s.grid_size; ++y) {
    for (int x = 0; x < s.grid_size; ++x) {
      d.cells.push_back({{x, y}, s.is_free({x, y}) ? CellState::free : CellState::occupied});
    }
  }
  return d;
}

}  // namespace

TEST(Sense, DiscMatchesBruteForceInOpenSpace) {
  auto s = open_room(40);
  WorldBelief b(s);
  const SimConfig cfg;
  const auto delta = sense(s, b, s.start_cell, cfg);
  std::set<std::pair<int, int>> got;
  for (const auto& e : delta.cells) got.insert({e.cell.x, e.cell.y});
  const double r = cfg.sensing_range / s.cell_size;
  std::set<std::pair<int, int>> want;
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 40; ++x) {
      const double dx = x - s.start_cell.x, dy = y - s.start_cell.y;
      if (std::sqrt(dx * dx + dy * dy) <= r) want.insert({x, y});
    }
  }
  EXPECT_EQ(got, want);
}

TEST(Sense, ObjectJustOutsideRangeNotObserved) {
  auto s = open_room(40);
  const int r = static_cast<int>(SimConfig{}.sensing_range / s.cell_size);
  add_object(s, "lamp", {s.start_cell.x + r + 1, s.start_cell.y});
  add_object(s, "book", {s.start_cell.x + r, s.start_cell.y});
  WorldBelief b(s);
  const auto delta = sense(s, b, s.start_cell, {});
  EXPECT_EQ(delta.objects, std::vector<int>{1});
}

TEST(Sense, ObjectBehindWallNotObserved) {
  auto s = ascii_scenario({
      "###########",
      "#.........#",
      "#.........#",
      "#...S.#.o.#",
      "#.....#...#",
      "#.........#",
      "#.........#",
      "#.........#",
      "#.........#",
      "#.........#",
      "###########",
  });
  add_object(s, "lamp", {8, 3});
  s.occupancy[Cell{6, 2}] = 1;
  s.occupancy[Cell{6, 4}] = 1;
  for (auto& r : s.regions) std::erase_if(r.cells, [&](Cell c) { return !s.is_free(c); });
  WorldBelief b(s);
  EXPECT_TRUE(sense(s, b, s.start_cell, {}).objects.empty());
  EXPECT_EQ(sense(s, b, {8, 1}, {}).objects, std::vector<int>{0});
}

TEST(Sense, AlreadyExploredCellsNotRepeated) {
  auto s = open_room(30);
  WorldBelief b(s);
  b.apply(sense(s, b, s.start_cell, {}));
  EXPECT_TRUE(sense(s, b, s.start_cell, {}).cells.empty());
}

TEST(Action, ZeroActionKeepsState) {
  auto s = open_room(20);
  WorldBelief b(s);
  b.apply(sense(s, b, s.start_cell, {}));
  b.apply_action({0, 0}, 1.0);
  EXPECT_EQ(b.robot_cell(), s.start_cell);
  EXPECT_EQ(b.traveled(), 0.0);
}

TEST(Action, BoundIsStrict) {
  auto s = open_room(20);
  WorldBelief b(s);
  b.apply(sense(s, b, s.start_cell, {}));
  EXPECT_THROW(b.apply_action({4, 0}, 1.0), IllegalMove);  // exactly 1 m
  b.apply_action({3, 0}, 1.0);
  EXPECT_DOUBLE_EQ(b.traveled(), 0.75);
  EXPECT_EQ(b.path_log().size(), 2u);
}

TEST(Action, UnknownCellRejected) {
  auto s = open_room(40);
  WorldBelief b(s);
  EXPECT_THROW(b.apply_action({1, 0}, 1.0), IllegalMove);
}

TEST(Termination, States) {
  auto s = open_room(20);
  add_object(s, "bed", {3, 3});
  s.target = ObjectRef{s.class_index("bed"), 0};
  WorldBelief b(s);
  EXPECT_EQ(check_termination(s, b, 1), Termination::running);
  auto all = reveal_all(s);
  all.objects = {0};
  b.apply(all);
  EXPECT_EQ(check_termination(s, b, 0), Termination::found);
}

TEST(Termination, ExhaustedWhenNoFrontiers) {
  auto s = open_room(20);
  WorldBelief b(s);
  b.apply(reveal_all(s));
  EXPECT_EQ(check_termination(s, b, 0), Termination::exhausted);
}

// A full sweep of sensing from every free cell observes every object, so
// exhaustion with an unobserved target cannot happen.
TEST(Termination, SweepObservesTarget) {
  for (std::uint64_t seed : {1u, 2u}) {
    const auto s = generate_scenario(seed, {});
    WorldBelief b(s);
    for (int y = 0; y < s.grid_size; ++y) {
      for (int x = 0; x < s.grid_size; ++x) {
        if (s.is_free({x, y})) b.apply(sense(s, b, {x, y}, {}));
      }
    }
    EXPECT_TRUE(b.has_observed(s.target_object()));
  }
}

TEST(SimConfig, RejectsStepBelowDiagonal) {
  SimConfig c;
  c.step_bound = 0.3;
  EXPECT_THROW(validate(c, 0.25), ValidationError);
}

TEST(Checksum, IndependentOfObjectOrder) {
  Grid<CellState> g(4, 4, CellState::unexplored);
  EXPECT_EQ(belief_checksum(g, {3, 1, 2}), belief_checksum(g, {1, 2, 3}));
  g[Cell{1, 1}] = CellState::free;
  EXPECT_NE(belief_checksum(g, {1, 2, 3}), belief_checksum(Grid<CellState>(4, 4, CellState::unexplored), {1, 2, 3}));
}
