// Acceptance gate: one PASS/FAIL line per primary criterion. Exit status is
// nonzero when any criterion fails. An optional argument names a directory
// that receives the result tables.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "semsearch/semsearch.hpp"

using namespace semsearch;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void report(int id, const std::string& name, double limit_s, const std::function<Verdict()>& body) {
  const auto t0 = Clock::now();
  Verdict o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = Verdict{false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  const bool in_time = secs < limit_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++g_failures;
  std::printf("%s [%d] %s: %s; %.1f s (limit %.0f s%s)\n", pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs,
              limit_s, in_time ? "" : ", exceeded");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

Matrix random_metric(std::size_t m, Rng& rng) {
  std::vector<std::pair<double, double>> pts(m);
  for (auto& p : pts) p = {rng.uniform(0, 10), rng.uniform(0, 10)};
  Matrix d(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) d[i][j] = std::hypot(pts[i].first - pts[j].first, pts[i].second - pts[j].second);
  return d;
}

std::vector<Scenario> generated(std::uint64_t first, int count) {
  std::vector<Scenario> out;
  for (int i = 0; i < count; ++i) out.push_back(generate_scenario(first + static_cast<std::uint64_t>(i), {}));
  return out;
}

// ---------------------------------------------------------------------------
// Shared primary pipeline: curated scenario pools, oracle data, ten trained
// models, and the three-mode evaluation suite.

constexpr double kCurateRatio = 1.5;

struct Pools {
  std::vector<Scenario> train;
  std::vector<Scenario> eval;
};

Pools make_pools(const EvalConfig& cfg) {
  return {curate(generated(1000, 30), kCurateRatio, cfg), curate(generated(0, 34), kCurateRatio, cfg)};
}

struct PrimaryRun {
  SuiteResult suite;
  std::size_t records = 0;
  int interventions = 0;
};

PrimaryRun run_primary(const Pools& pools, const EvalConfig& cfg) {
  PrimaryRun out;
  const OracleConfig oracle = cfg.episode.oracle;
  const auto data = collect(pools.train, 30, oracle, cfg);
  out.records = data.records.size();
  for (int n : data.interventions) out.interventions += n;
  const TrainConfig tcfg;
  ModeSpec learned{PlannerMode::learned, {}};
  for (auto seed : tcfg.seeds) {
    auto r = train(data.records, tcfg, seed, data.records.front().class_names);
    learned.models.emplace_back("seed" + std::to_string(seed), std::move(r.model));
  }
  out.suite = run_suite(pools.eval, {{PlannerMode::coverage, {}}, {PlannerMode::oracle_priorities, {}}, learned}, cfg);
  return out;
}

std::string tables(const SuiteResult& s) { return rows_to_jsonl(s.rows) + plr_csv(s.rows) + s.summary.dump(1); }

double num(const json& j, const char* key) { return j.contains(key) && j[key].is_number() ? j[key].get<double>() : std::nan(""); }

}  // namespace

int main(int argc, char** argv) {
  const std::string out_dir = argc > 1 ? argv[1] : "";
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  EvalConfig cfg;
  cfg.jobs = jobs();

  report(1, "choice-model identities", 1, [] {
    Rng rng(1);
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
      const double rho = rng.uniform(0.0, 0.5);
      const double x = rng.uniform(-60.0, 60.0);
      const double s = sigma_rho(x, rho);
      worst = std::max(worst, std::abs(sigma_rho(0.0, rho) - 0.5));
      worst = std::max(worst, std::abs(s + sigma_rho(-x, rho) - 1.0));
      worst = std::max({worst, rho - s, s - (1.0 - rho)});
    }
    return Verdict{worst <= 1e-12, "max identity violation " + fmt("%.3g", worst) + " (tolerance 1e-12)"};
  });

  report(2, "gradient matches central differences", 10, [] {
    Rng rng(2);
    const double h = 1e-6;
    double worst = 0.0;
    for (int point = 0; point < 50; ++point) {
      const std::size_t classes = static_cast<std::size_t>(rng.uniform_int(3, 17));
      std::vector<ChoiceRecord> records;
      const int n = static_cast<int>(rng.uniform_int(1, 12));
      for (int r = 0; r < n; ++r) {
        ChoiceRecord rec;
        rec.class_names.assign(classes, "c");
        const int m = static_cast<int>(rng.uniform_int(2, 7));
        for (int i = 0; i < m; ++i) {
          CandidateRecord c{i, {i, 0}, {}};
          for (std::size_t k = 0; k < classes + 2; ++k) c.features.push_back(rng.bernoulli(0.5) ? rng.uniform(0, 1.2) : 0.0);
          c.features.back() = rng.uniform(0, 8);
          rec.candidates.push_back(c);
        }
        rec.chosen_frontier_id = static_cast<int>(rng.uniform_int(0, m - 1));
        records.push_back(rec);
      }
      std::vector<double> w(classes + 2);
      for (auto& x : w) x = rng.uniform();
      w.back() = rng.uniform(0, 0.2);
      const double beta = 10.0, rho = 0.1;
      const auto g = grad_nll(records, w, beta, rho);
      double diff2 = 0.0, norm2 = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) {
        auto up = w, down = w;
        up[k] += h;
        down[k] -= h;
        const double fd = (nll(records, up, beta, rho) - nll(records, down, beta, rho)) / (2.0 * h);
        diff2 += (fd - g[k]) * (fd - g[k]);
        norm2 += g[k] * g[k];
      }
      worst = std::max(worst, std::sqrt(diff2) / std::max(std::sqrt(norm2), 1e-300));
    }
    return Verdict{worst <= 1e-5, "max relative error " + fmt("%.3g", worst) + " over 50 points (bound 1e-5)"};
  });

  report(3, "LNS versus exact solver", 60, [] {
    Rng rng(3);
    int within = 0, below = 0;
    double worst = 1.0;
    for (int t = 0; t < 100; ++t) {
      const std::size_t frontiers = static_cast<std::size_t>(rng.uniform_int(4, 8));
      const auto d = random_metric(frontiers + 1, rng);
      std::vector<double> p{0.0};
      for (std::size_t i = 0; i < frontiers; ++i) p.push_back(rng.uniform(0.0, 2.0));
      Rng solver(static_cast<std::uint64_t>(t));
      const double lns = solve_lns(d, p, {}, solver).cost;
      const double exact = solve_exact(d, p).cost;
      within += lns <= 1.05 * exact;
      below += lns < exact - 1e-9 * std::max(1.0, exact);
      worst = std::max(worst, exact > 0 ? lns / exact : 1.0);
    }
    return Verdict{within >= 95 && below == 0, std::to_string(within) + "/100 within 5% of exact, " + std::to_string(below) +
                                                   " below exact, worst ratio " + fmt("%.4f", worst)};
  });

  report(4, "tour cost equals brute-force evaluation", 5, [] {
    Rng rng(4);
    int mismatches = 0;
    for (int t = 0; t < 1000; ++t) {
      const std::size_t m = static_cast<std::size_t>(rng.uniform_int(2, 12));
      const auto d = random_metric(m, rng);
      std::vector<double> p{0.0};
      for (std::size_t i = 1; i < m; ++i) p.push_back(rng.uniform(0.0, 2.0));
      std::vector<int> order(m);
      std::iota(order.begin(), order.end(), 0);
      rng.shuffle(order.begin() + 1, order.end());
      double brute = 0.0;
      for (std::size_t i = 1; i < m; ++i) {
        double latency = 0.0;
        for (std::size_t j = 1; j <= i; ++j) latency += d[order[j - 1]][order[j]];
        brute += p[order[i]] * latency;
      }
      mismatches += tour_cost(order, d, p) != brute;
    }
    return Verdict{mismatches == 0, std::to_string(mismatches) + " mismatches over 1000 permutations"};
  });

  report(5, "completeness without a target", 300, [&] {
    auto fixtures = generated(500, 10);
    for (auto& s : fixtures) s.target.reset();
    const auto& names = fixtures.front().class_names;
    std::vector<std::pair<std::string, EpisodeConfig>> configs;
    EpisodeConfig cov = cfg.episode;
    cov.planner.mode = PlannerMode::coverage;
    configs.emplace_back("coverage", cov);
    EpisodeConfig zero = cfg.episode;
    zero.planner.mode = PlannerMode::learned;
    zero.model = PriorityModel::zeros(names);
    configs.emplace_back("zero", zero);
    Rng wr(5);
    for (int k = 0; k < 2; ++k) {
      EpisodeConfig rnd = zero;
      rnd.model = PriorityModel::zeros(names);
      for (auto& x : rnd.model->w) x = wr.uniform();
      configs.emplace_back("random" + std::to_string(k), rnd);
    }
    // Adversarial: every class except the door scores 1, novelty 0.
    EpisodeConfig adv = zero;
    adv.model = PriorityModel::zeros(names);
    for (std::size_t k = 0; k < names.size(); ++k) adv.model->w[k] = names[k] == "door" ? 0.0 : 1.0;
    configs.emplace_back("adversarial", adv);

    std::vector<std::string> misses(fixtures.size() * configs.size());
    parallel_for(misses.size(), cfg.jobs, [&](std::size_t job) {
      const auto& s = fixtures[job / configs.size()];
      const auto& [name, ec] = configs[job % configs.size()];
      Episode ep(s, ec);
      ep.run();
      const auto reach = flood_fill(s.grid_size, s.grid_size, s.start_cell, [&](Cell c) { return s.is_free(c); });
      long missing = 0;
      for (int y = 0; y < s.grid_size; ++y)
        for (int x = 0; x < s.grid_size; ++x) missing += reach[Cell{x, y}] && !ep.belief().known_free({x, y});
      if (ep.outcome() != Outcome::exhausted || missing > 0) {
        misses[job] = s.id + "/" + name + ": " + std::to_string(missing) + " cells, " + to_string(ep.outcome());
      }
    });
    std::string bad;
    int failed = 0;
    for (const auto& m : misses) {
      if (m.empty()) continue;
      ++failed;
      if (bad.size() < 200) bad += " " + m;
    }
    return Verdict{failed == 0, std::to_string(misses.size() - failed) + "/" + std::to_string(misses.size()) +
                                    " episodes fully explored (10 fixtures x coverage, zero, 2 random, adversarial)" + bad};
  });

  report(6, "synthetic weight recovery", 600, [&] {
    const auto train_s = generated(2000, 30);
    const auto held_s = generated(3000, 10);
    const auto& names = train_s.front().class_names;
    OracleConfig o;
    o.kind = OracleKind::linear;
    o.params.beta = 25.0;
    o.params.rho = 0.0;
    o.linear_model = PriorityModel::from_named(
        names, {{"bed", 1.0}, {"wardrobe", 0.8}, {"sofa", 0.4}, {"tv", 0.3}, {"door", 0.5}, {"novelty", 0.6}}, 0.05);
    const auto data = collect(train_s, 30, o, cfg);
    OracleConfig probe = o;
    probe.params.tau = 0.0;
    const auto held = collect(held_s, 10, probe, cfg).records;
    const auto w_star = o.linear_model.augmented();
    const auto argmax = [](const ChoiceRecord& r, const std::vector<double>& w) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < r.candidates.size(); ++i) {
        if (dot(w, r.candidates[i].features) > dot(w, r.candidates[best].features)) best = i;
      }
      return best;
    };
    double worst = 1.0, sum = 0.0;
    const TrainConfig tcfg;
    for (const auto& tr : train_seeds(data.records, tcfg, names)) {
      const auto w = tr.model.augmented();
      int agree = 0;
      for (const auto& r : held) agree += argmax(r, w) == argmax(r, w_star);
      const double a = static_cast<double>(agree) / static_cast<double>(held.size());
      worst = std::min(worst, a);
      sum += a;
    }
    return Verdict{!held.empty() && worst >= 0.8, std::to_string(data.records.size()) + " training records, " +
                                                      std::to_string(held.size()) + " held-out sets; agreement min " +
                                                      fmt("%.3f", worst) + ", mean " + fmt("%.3f", sum / 10.0) +
                                                      " over 10 seeds (bound 0.80 per seed)"};
  });

  Pools pools;
  PrimaryRun primary;
  report(7, "end-to-end advantage", 1800, [&] {
    pools = make_pools(cfg);
    primary = run_primary(pools, cfg);
    const auto& modes = primary.suite.summary["modes"];
    const auto& learned = modes["learned"];
    const auto& oracle = modes["oracle_priorities"];
    const auto& coverage = modes["coverage"];
    const double l_med = num(learned, "plr_median"), l_below = num(learned, "plr_below_1");
    const double o_med = num(oracle, "plr_median");
    const double c_spl = num(coverage, "spl_mean"), l_spl = num(learned, "spl_mean");
    const bool pass = pools.eval.size() >= 30 && l_med < 0.9 && l_below >= 0.7 && o_med <= l_med && c_spl < l_spl;
    if (!out_dir.empty()) {
      write_file(out_dir + "/episodes.jsonl", rows_to_jsonl(primary.suite.rows));
      write_file(out_dir + "/plr.csv", plr_csv(primary.suite.rows));
      write_file(out_dir + "/summary.json", primary.suite.summary.dump(2) + "\n");
    }
    return Verdict{pass, std::to_string(pools.eval.size()) + " scenarios, " + std::to_string(primary.records) +
                             " training records; learned median PLR " + fmt("%.3f", l_med) + " (reference 0.644), PLR<1 " +
                             fmt("%.3f", l_below) + " (reference 0.88), PLR<1.3 " + fmt("%.3f", num(learned, "plr_below_1_3")) +
                             " (reference 0.97); oracle median " + fmt("%.3f", o_med) + "; SPL coverage " + fmt("%.3f", c_spl) +
                             " vs learned " + fmt("%.3f", l_spl) + " (reference 0.406 vs 0.627)"};
  });

  report(8, "robustness across datasets and oracle variants", 2700, [&] {
    if (pools.train.empty()) pools = make_pools(cfg);
    const auto rows = ablation_sweep(pools.train, pools.eval, default_ablation(cfg.episode.oracle), TrainConfig{}, cfg);
    bool pass = true;
    std::string detail;
    int base_interventions = -1, tau_interventions = -1;
    for (const auto& r : rows) {
      const double med = num(r.aggregate, "plr_median");
      pass = pass && med < 1.0;
      detail += r.variant.name + " " + fmt("%.3f", med) + ", ";
      if (r.variant.name == "n_eps_30") base_interventions = r.interventions;
      if (r.variant.name == "tau_0.2") tau_interventions = r.interventions;
    }
    pass = pass && base_interventions >= 0 && tau_interventions >= 0 && tau_interventions < base_interventions;
    if (!out_dir.empty()) write_file(out_dir + "/ablation.json", ablation_to_json(rows).dump(2) + "\n");
    return Verdict{pass, "median PLR: " + detail + "interventions tau 0.05 " + std::to_string(base_interventions) +
                             " vs tau 0.2 " + std::to_string(tau_interventions)};
  });

  report(9, "byte-identical result tables", 1800, [&] {
    if (pools.eval.empty()) pools = make_pools(cfg);
    if (primary.suite.rows.empty()) primary = run_primary(pools, cfg);
    const auto again = run_primary(make_pools(cfg), cfg);
    const bool same = tables(primary.suite) == tables(again.suite);
    return Verdict{same, std::string(same ? "identical" : "different") + " episodes.jsonl, plr.csv and summary.json (" +
                             std::to_string(again.suite.rows.size()) + " rows) across two runs"};
  });

  std::printf("%d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
