#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace semsearch;

namespace {

std::vector<Scenario> small_suite(int n, std::uint64_t base) {
  std::vector<Scenario> out;
  for (int i = 0; i < n; ++i) out.push_back(generate_scenario(base + i, {}));
  return out;
}

}  // namespace

TEST(Metrics, Plr) {
  EXPECT_EQ(plr(10.0, 10.0), 1.0);
  EXPECT_EQ(plr(5.0, 10.0), 0.5);
}

TEST(Metrics, Spl) {
  EXPECT_EQ(spl(true, 4.0, 4.0), 1.0);
  EXPECT_EQ(spl(true, 8.0, 4.0), 0.5);
  EXPECT_EQ(spl(false, 8.0, 4.0), 0.0);
}

TEST(Suite, EmptyModesGiveEmptyTable) {
  const auto r = run_suite(small_suite(1, 1), {}, {});
  EXPECT_TRUE(r.rows.empty());
  EXPECT_TRUE(r.summary["modes"].empty());
}

TEST(Suite, CoverageAgainstItselfIsOne) {
  const auto r = run_suite(small_suite(3, 20), {{PlannerMode::coverage, {}}}, {});
  ASSERT_EQ(r.rows.size(), 3u);
  for (const auto& row : r.rows) EXPECT_EQ(row.plr, 1.0);
  EXPECT_EQ(r.summary["modes"]["coverage"]["plr_median"], 1.0);
}

TEST(Suite, OneRowPerScenarioAndModel) {
  const auto scenarios = small_suite(2, 30);
  ModeSpec learned{PlannerMode::learned, {}};
  for (int k = 0; k < 3; ++k) {
    auto m = PriorityModel::from_named(scenarios[0].class_names, {{"bed", 1.0}, {"door", 0.1 * k}});
    learned.models.emplace_back("m" + std::to_string(k), m);
  }
  const auto r = run_suite(scenarios, {learned}, {});
  EXPECT_EQ(r.rows.size(), 6u);
  const auto& agg = r.summary["modes"]["learned"];
  EXPECT_EQ(agg["episodes"], 6);
  for (const char* key : {"plr_median", "plr_below_1", "plr_below_1_3", "spl_mean", "spl_std"}) {
    EXPECT_TRUE(agg.contains(key)) << key;
  }
}

TEST(Suite, ByteIdenticalAcrossRuns) {
  const auto scenarios = small_suite(2, 40);
  const std::vector<ModeSpec> modes{{PlannerMode::coverage, {}}, {PlannerMode::oracle_priorities, {}}};
  const auto a = run_suite(scenarios, modes, {});
  EvalConfig threaded;
  threaded.jobs = 2;
  const auto b = run_suite(scenarios, modes, threaded);
  EXPECT_EQ(rows_to_jsonl(a.rows), rows_to_jsonl(b.rows));
  EXPECT_EQ(plr_csv(a.rows), plr_csv(b.rows));
  EXPECT_EQ(a.summary.dump(), b.summary.dump());
}

TEST(Collect, FiveEpisodesProduceInterventions) {
  const auto scenarios = small_suite(5, 50);
  const auto data = collect(scenarios, 5, OracleConfig{}, {});
  int total = 0;
  for (int n : data.interventions) total += n;
  EXPECT_GT(total, 0);
  EXPECT_EQ(static_cast<std::size_t>(total), data.records.size());
  std::cout << "interventions at 5 episodes: " << total << "\n";
}

TEST(Collect, HigherTauFewerInterventionsOnMatchedSeeds) {
  const auto scenarios = small_suite(4, 60);
  OracleConfig lo, hi;
  hi.params.tau = 0.2;
  int n_lo = 0, n_hi = 0;
  for (int n : collect(scenarios, 8, lo, {}).interventions) n_lo += n;
  for (int n : collect(scenarios, 8, hi, {}).interventions) n_hi += n;
  EXPECT_LE(n_hi, n_lo);
}

TEST(Ablation, DefaultGridHasFourSizes) {
  const auto v = default_ablation(OracleConfig{});
  int sizes = 0;
  for (const auto& x : v) sizes += x.name.rfind("n_eps_", 0) == 0;
  EXPECT_EQ(sizes, 4);
  EXPECT_EQ(v.size(), 7u);
}

TEST(Aggregate, FractionsAndMedian) {
  std::vector<EpisodeRow> rows(4);
  const double plrs[] = {0.5, 0.9, 1.1, 1.4};
  std::vector<const EpisodeRow*> ptrs;
  for (int i = 0; i < 4; ++i) {
    rows[i].result.outcome = Outcome::found;
    rows[i].plr = plrs[i];
    rows[i].spl = 0.25 * i;
    ptrs.push_back(&rows[i]);
  }
  const auto agg = aggregate(ptrs);
  EXPECT_DOUBLE_EQ(agg["plr_median"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(agg["plr_below_1"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(agg["plr_below_1_3"].get<double>(), 0.75);
  EXPECT_DOUBLE_EQ(agg["spl_mean"].get<double>(), 0.375);
}
