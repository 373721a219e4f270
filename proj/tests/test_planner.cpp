#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace semsearch;
using namespace semsearch::testing;

namespace {

std::vector<double> random_priorities(std::size_t m, Rng& rng) {
  std::vector<double> p{0.0};
  for (std::size_t i = 1; i < m; ++i) p.push_back(rng.uniform(0, 2));
  return p;
}

std::vector<int> random_order(std::size_t m, Rng& rng) {
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order.begin() + 1, order.end());
  return order;
}

}  // namespace

TEST(Priorities, AllZeroGivesAlphaTimesGain) {
  const auto p = planner_priorities({0.0, 0.0, 0.0}, {2.0, 4.0, 1.0}, 0.5);
  EXPECT_EQ(p, (std::vector<double>{1.0, 2.0, 0.5}));
}

TEST(Priorities, MaxGetsOnePlusAlpha) {
  const auto p = planner_priorities({0.2, 0.8, 0.4}, {3.0, 5.0, 2.0}, 0.2);
  EXPECT_DOUBLE_EQ(p[1], 1.2 * 5.0);
  EXPECT_DOUBLE_EQ(p[0], (0.25 + 0.2) * 3.0);
  EXPECT_DOUBLE_EQ(p[2], (0.5 + 0.2) * 2.0);
}

TEST(Priorities, EmptySemanticIsCoverage) {
  EXPECT_EQ(planner_priorities({}, {3.0, 1.0}, 0.2), (std::vector<double>{3.0, 1.0}));
}

TEST(TourCost, SingleFrontier) {
  const Matrix d{{0, 2.5}, {2.5, 0}};
  EXPECT_DOUBLE_EQ(tour_cost({0, 1}, d, {0, 3.0}), 7.5);
}

TEST(TourCost, UniformPriorityFactorsOut) {
  Rng rng(1);
  const auto d = random_metric(6, rng);
  const auto order = random_order(6, rng);
  std::vector<double> ones(6, 1.0), threes(6, 3.0);
  EXPECT_NEAR(tour_cost(order, d, threes), 3.0 * tour_cost(order, d, ones), 1e-12);
}

TEST(TourCost, MatchesDirectSumOnRandomPermutations) {
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t m = static_cast<std::size_t>(rng.uniform_int(2, 9));
    const auto d = random_metric(m, rng);
    const auto p = random_priorities(m, rng);
    const auto order = random_order(m, rng);
    EXPECT_NEAR(tour_cost(order, d, p), brute_tour_cost(order, d, p), 1e-12 * std::max(1.0, brute_tour_cost(order, d, p)));
  }
}

TEST(Exact, TwoFrontiersPicksBetterOrder) {
  const Matrix d{{0, 1, 3}, {1, 0, 2}, {3, 2, 0}};
  const std::vector<double> p{0, 1, 10};
  const auto t = solve_exact(d, p);
  const double a = tour_cost({0, 1, 2}, d, p), b = tour_cost({0, 2, 1}, d, p);
  EXPECT_DOUBLE_EQ(t.cost, std::min(a, b));
}

TEST(Exact, MatchesEnumeration) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t m = static_cast<std::size_t>(rng.uniform_int(2, 7));
    const auto d = random_metric(m, rng);
    auto p = random_priorities(m, rng);
    if (t % 4 == 0) std::fill(p.begin() + 1, p.end(), 1.0);
    const auto tour = solve_exact(d, p);
    EXPECT_TRUE(is_valid_tour(tour.order, m));
    EXPECT_NEAR(tour.cost, enumerate_best(d, p), 1e-9);
    EXPECT_NEAR(tour.cost, tour_cost(tour.order, d, p), 1e-12);
  }
}

TEST(Exact, HighPriorityNodeMovesFirst) {
  // Two cheap nodes east, one node west; raising the west node's priority
  // pulls it to the front of the optimal order.
  const std::vector<std::pair<double, double>> pts{{0, 0}, {1, 0}, {2, 0}, {-1.5, 0}};
  Matrix d(4, std::vector<double>(4));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) d[i][j] = std::abs(pts[i].first - pts[j].first);
  EXPECT_NE(solve_exact(d, {0, 1, 1, 1}).order[1], 3);
  EXPECT_EQ(solve_exact(d, {0, 1, 1, 20}).order[1], 3);
}

TEST(Lns, NeverWorseThanGreedyNorBelowExact) {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = static_cast<std::size_t>(rng.uniform_int(2, 9));
    const auto d = random_metric(m, rng);
    const auto p = random_priorities(m, rng);
    Rng solver(t);
    const auto tour = solve_lns(d, p, {}, solver);
    EXPECT_TRUE(is_valid_tour(tour.order, m));
    EXPECT_LE(tour.cost, greedy_tour(d, p).cost + 1e-12);
    EXPECT_GE(tour.cost, solve_exact(d, p).cost - 1e-9);
  }
}

TEST(Lns, WarmStartNeverWorsened) {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const std::size_t m = 10;
    const auto d = random_metric(m, rng);
    const auto p = random_priorities(m, rng);
    const auto warm = solve_exact(d, p).order;
    Rng solver(t);
    EXPECT_LE(solve_lns(d, p, {}, solver, warm).cost, tour_cost(warm, d, p) + 1e-12);
  }
}

TEST(Lns, DeterministicForSeed) {
  Rng rng(6);
  const auto d = random_metric(25, rng);
  const auto p = random_priorities(25, rng);
  Rng a(9), b(9);
  EXPECT_EQ(solve_lns(d, p, {}, a).order, solve_lns(d, p, {}, b).order);
}

TEST(Lns, ResultIsTwoOptLocal) {
  Rng rng(7);
  for (int t = 0; t < 30; ++t) {
    const std::size_t m = static_cast<std::size_t>(rng.uniform_int(3, 20));
    const auto d = random_metric(m, rng);
    const auto p = random_priorities(m, rng);
    Rng solver(t);
    const auto tour = solve_lns(d, p, {}, solver);
    for (std::size_t i = 1; i + 1 < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        auto alt = tour.order;
        std::reverse(alt.begin() + static_cast<long>(i), alt.begin() + static_cast<long>(j) + 1);
        EXPECT_GE(tour_cost(alt, d, p), tour.cost - 1e-9 * std::max(1.0, tour.cost));
      }
    }
  }
}

TEST(Lns, CloseToExactOnSmallInstances) {
  Rng rng(8);
  int within = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = static_cast<std::size_t>(rng.uniform_int(4, 8));
    const auto d = random_metric(m, rng);
    const auto p = random_priorities(m, rng);
    Rng solver(t);
    within += solve_lns(d, p, {}, solver).cost <= 1.05 * solve_exact(d, p).cost;
  }
  EXPECT_GE(within, 95);
}

class PolicyFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    s = open_room(60);
    belief = WorldBelief(s);
    g = TopoGraph(TopoConfig{}, 60, 60, s.cell_size);
    const auto d = sense(s, belief, s.start_cell, {});
    belief.apply(d);
    Rng rng(1);
    g.expand(belief, d.cells, rng);
    g.mark_observed(g.robot_node());
    g.update_gains(belief, d.cells);
  }

  Scenario s;
  WorldBelief belief;
  TopoGraph g;
};

TEST_F(PolicyFixture, NoTriggerNoReplan) {
  FrontierPolicy policy(PlannerConfig{.mode = PlannerMode::coverage});
  const auto coverage = [](const std::vector<int>&) { return std::vector<double>{}; };
  Rng rng(2);
  const auto first = policy.plan(g, coverage, rng);
  ASSERT_TRUE(first.replanned);
  ASSERT_GE(first.frontiers.size(), 2u);
  const auto second = policy.plan(g, coverage, rng);
  EXPECT_FALSE(second.replanned);
  EXPECT_EQ(second.subgoal, first.subgoal);
  EXPECT_EQ(policy.replans(), 1u);
}

TEST_F(PolicyFixture, ReachedSubgoalAdvancesAlongTour) {
  FrontierPolicy policy(PlannerConfig{.mode = PlannerMode::coverage});
  const auto coverage = [](const std::vector<int>&) { return std::vector<double>{}; };
  Rng rng(3);
  const auto first = policy.plan(g, coverage, rng);
  ASSERT_GE(first.tour.size(), 3u);
  g.set_robot_node(first.subgoal);
  const auto next = policy.plan(g, coverage, rng);
  EXPECT_FALSE(next.replanned);
  EXPECT_EQ(next.subgoal, first.tour[2]);
}

TEST_F(PolicyFixture, ZeroSemanticEqualsCoverage) {
  FrontierPolicy a(PlannerConfig{.mode = PlannerMode::coverage});
  FrontierPolicy b(PlannerConfig{.mode = PlannerMode::learned});
  Rng ra(4), rb(4);
  const auto cov = a.plan(g, [](const std::vector<int>&) { return std::vector<double>{}; }, ra);
  const auto zero = b.plan(g, [](const std::vector<int>& ids) { return std::vector<double>(ids.size(), 0.0); }, rb);
  EXPECT_EQ(cov.tour, zero.tour);
}

TEST_F(PolicyFixture, OverridePinsSubgoal) {
  FrontierPolicy policy;
  const auto coverage = [](const std::vector<int>&) { return std::vector<double>{}; };
  Rng rng(5);
  const auto first = policy.plan(g, coverage, rng);
  const int other = first.tour.back();
  ASSERT_NE(other, first.subgoal);
  policy.override_subgoal(other);
  EXPECT_EQ(policy.plan(g, coverage, rng).subgoal, other);
  EXPECT_EQ(shortest_path(g, g.robot_node(), other).nodes[1], policy.next_hop(g));
}

TEST(PlannerMode, ParseAndPrint) {
  for (auto m : {PlannerMode::learned, PlannerMode::coverage, PlannerMode::oracle_priorities, PlannerMode::linear_oracle,
                 PlannerMode::oracle_interventions}) {
    EXPECT_EQ(parse_planner_mode(to_string(m)), m);
  }
  EXPECT_EQ(parse_planner_mode("oracle"), PlannerMode::oracle_priorities);
  EXPECT_THROW(parse_planner_mode("teleport"), ParseError);
}
