#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "semsearch/core/error.hpp"
#include "semsearch/core/json_util.hpp"
#include "semsearch/core/rng.hpp"
#include "semsearch/episode.hpp"
#include "semsearch/expert.hpp"
#include "semsearch/learn.hpp"

namespace semsearch {

/// Path length ratio of a semantic run against the coverage run.
inline double plr(double l_sem, double l_cov) {
  if (!(l_cov > 0.0)) throw ValidationError("coverage path length must be positive");
  return l_sem / l_cov;
}

/// Success weighted by path length.
inline double spl(bool found, double l, double l_star) {
  if (!found) return 0.0;
  const double denom = std::max(l, l_star);
  return denom > 0.0 ? l_star / denom : 1.0;
}

/// Runs `n` independent jobs on up to `jobs` threads; job i writes slot i.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

/// Episode seed for a scenario: shared by every planner so paired runs see
/// the same random stream.
inline std::uint64_t scenario_stream(const Scenario& s, std::uint64_t base) { return mix64(fnv1a(s.id) ^ mix64(base)); }

struct EvalConfig {
  EpisodeConfig episode;     // mode, model and seed are set per episode
  double budget_factor = 4;  // step cap relative to full coverage exploration
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// Steps the coverage planner needs to explore the scenario completely.
inline int full_exploration_steps(const Scenario& s, const EvalConfig& cfg) {
  Scenario open = s;
  open.target.reset();
  EpisodeConfig ec = cfg.episode;
  ec.planner.mode = PlannerMode::coverage;
  ec.model.reset();
  ec.seed = scenario_stream(s, cfg.seed);
  ec.trace = false;
  Episode ep(open, ec);
  ep.run();
  return ep.steps();
}

struct EpisodeRow {
  EpisodeResult result;
  std::string model;           // weight identifier, empty when unused
  double plr = std::nan("");   // against coverage on the same scenario
  double spl = 0.0;
  std::string error;           // non-empty when the episode failed
};

/// Runs one episode, turning failures into a row with `error` set.
inline EpisodeRow run_row(const Scenario& s, EpisodeConfig ec, int max_steps, const std::string& model_name) {
  EpisodeRow row;
  row.model = model_name;
  row.result.scenario_id = s.id;
  row.result.mode = to_string(ec.planner.mode);
  row.result.seed = ec.seed;
  try {
    ec.sim.max_steps = max_steps;
    Episode ep(s, ec);
    row.result = ep.run();
    row.result.shortest = shortest_observation_distance(s, ec.sim);
    row.spl = spl(row.result.outcome == Outcome::found, row.result.path_length, row.result.shortest);
  } catch (const std::exception& e) {
    row.error = e.what();
    row.result.outcome = Outcome::budget;
  }
  return row;
}

struct ModeSpec {
  PlannerMode mode = PlannerMode::coverage;
  std::vector<std::pair<std::string, PriorityModel>> models;  // learned / linear_oracle
};

struct SuiteResult {
  std::vector<EpisodeRow> rows;
  json summary;
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace detail

inline constexpr int kSummaryFormatVersion = 1;

/// Aggregates over one mode's rows.
inline json aggregate(const std::vector<const EpisodeRow*>& rows) {
  std::vector<double> plrs, spls;
  int found = 0, failed = 0, interventions = 0;
  for (const auto* r : rows) {
    if (!r->error.empty()) ++failed;
    if (r->result.outcome == Outcome::found) ++found;
    interventions += r->result.interventions;
    spls.push_back(r->spl);
    if (std::isfinite(r->plr)) plrs.push_back(r->plr);
  }
  double below1 = 0, below13 = 0, mean_plr = 0;
  for (double p : plrs) {
    below1 += p < 1.0;
    below13 += p < 1.3;
    mean_plr += p;
  }
  const double np = static_cast<double>(plrs.size());
  double spl_mean = 0, spl_var = 0;
  for (double s : spls) spl_mean += s;
  if (!spls.empty()) spl_mean /= static_cast<double>(spls.size());
  for (double s : spls) spl_var += (s - spl_mean) * (s - spl_mean);
  if (!spls.empty()) spl_var /= static_cast<double>(spls.size());
  using detail::number_or_null;
  return {{"episodes", rows.size()},
          {"found", found},
          {"failed", failed},
          {"interventions", interventions},
          {"plr_count", plrs.size()},
          {"plr_median", number_or_null(detail::median(plrs))},
          {"plr_mean", number_or_null(plrs.empty() ? std::nan("") : mean_plr / np)},
          {"plr_below_1", number_or_null(plrs.empty() ? std::nan("") : below1 / np)},
          {"plr_below_1_3", number_or_null(plrs.empty() ? std::nan("") : below13 / np)},
          {"plr_box",
           {{"min", number_or_null(detail::quantile(plrs, 0.0))},
            {"q1", number_or_null(detail::quantile(plrs, 0.25))},
            {"median", number_or_null(detail::quantile(plrs, 0.5))},
            {"q3", number_or_null(detail::quantile(plrs, 0.75))},
            {"max", number_or_null(detail::quantile(plrs, 1.0))}}},
          {"spl_mean", spl_mean},
          {"spl_std", std::sqrt(spl_var)}};
}

/// Every (scenario, mode, model) combination. Coverage always runs first on
/// each scenario since it sets the step budget and the PLR denominator.
inline SuiteResult run_suite(const std::vector<Scenario>& scenarios, const std::vector<ModeSpec>& modes,
                             const EvalConfig& cfg) {
  SuiteResult out;
  out.summary = {{"format_version", kSummaryFormatVersion}, {"modes", json::object()}};
  if (modes.empty() || scenarios.empty()) return out;

  std::vector<int> budget(scenarios.size());
  std::vector<EpisodeRow> coverage(scenarios.size());
  parallel_for(scenarios.size(), cfg.jobs, [&](std::size_t i) {
    budget[i] = static_cast<int>(std::ceil(cfg.budget_factor * full_exploration_steps(scenarios[i], cfg)));
    EpisodeConfig ec = cfg.episode;
    ec.planner.mode = PlannerMode::coverage;
    ec.model.reset();
    ec.seed = scenario_stream(scenarios[i], cfg.seed);
    coverage[i] = run_row(scenarios[i], ec, budget[i], "");
  });

  struct Job {
    std::size_t scenario;
    PlannerMode mode;
    const std::pair<std::string, PriorityModel>* model;
  };
  std::vector<Job> jobs;
  for (const auto& m : modes) {
    if (m.mode == PlannerMode::coverage) continue;
    const bool needs_model = m.mode == PlannerMode::learned || m.mode == PlannerMode::linear_oracle;
    if (needs_model && m.models.empty()) throw ValidationError("mode " + to_string(m.mode) + " needs weights");
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
      if (needs_model) {
        for (const auto& model : m.models) jobs.push_back({i, m.mode, &model});
      } else {
        jobs.push_back({i, m.mode, nullptr});
      }
    }
  }
  std::vector<EpisodeRow> rows(jobs.size());
  parallel_for(jobs.size(), cfg.jobs, [&](std::size_t k) {
    const auto& job = jobs[k];
    EpisodeConfig ec = cfg.episode;
    ec.planner.mode = job.mode;
    ec.seed = scenario_stream(scenarios[job.scenario], cfg.seed);
    if (job.model) ec.model = job.model->second;
    rows[k] = run_row(scenarios[job.scenario], ec, budget[job.scenario], job.model ? job.model->first : "");
  });

  const auto pair = [&](EpisodeRow& r, std::size_t i) {
    const auto& cov = coverage[i].result;
    if (r.result.outcome == Outcome::found && cov.outcome == Outcome::found && cov.path_length > 0.0) {
      r.plr = plr(r.result.path_length, cov.path_length);
    }
  };
  for (std::size_t i = 0; i < scenarios.size(); ++i) pair(coverage[i], i);
  for (std::size_t k = 0; k < rows.size(); ++k) pair(rows[k], jobs[k].scenario);

  const bool want_coverage =
      std::any_of(modes.begin(), modes.end(), [](const ModeSpec& m) { return m.mode == PlannerMode::coverage; });
  if (want_coverage) out.rows = coverage;
  out.rows.insert(out.rows.end(), rows.begin(), rows.end());

  std::map<std::string, std::vector<const EpisodeRow*>> by_mode;
  for (const auto& r : out.rows) by_mode[r.result.mode].push_back(&r);
  for (const auto& [mode, list] : by_mode) out.summary["modes"][mode] = aggregate(list);
  out.summary["scenarios"] = scenarios.size();
  out.summary["seed"] = cfg.seed;
  out.summary["reference"] = {{"plr_median", 0.644}, {"plr_below_1", 0.88}, {"plr_below_1_3", 0.97},
                                    {"spl_coverage", 0.406}, {"spl_learned", 0.627}};
  return out;
}

inline json row_to_json(const EpisodeRow& r) {
  json j = {{"scenario_id", r.result.scenario_id},
            {"mode", r.result.mode},
            {"model", r.model},
            {"seed", r.result.seed},
            {"outcome", to_string(r.result.outcome)},
            {"path_length", r.result.path_length},
            {"shortest", r.result.shortest},
            {"steps", r.result.steps},
            {"interventions", r.result.interventions},
            {"plr", detail::number_or_null(r.plr)},
            {"spl", r.spl}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

inline std::string rows_to_jsonl(const std::vector<EpisodeRow>& rows) {
  std::string out;
  for (const auto& r : rows) out += row_to_json(r).dump() + "\n";
  return out;
}

/// Long-format table for box plots.
inline std::string plr_csv(const std::vector<EpisodeRow>& rows) {
  std::string out = "mode,model,scenario_id,plr,spl\n";
  char buf[64];
  for (const auto& r : rows) {
    out += r.result.mode + "," + r.model + "," + r.result.scenario_id + ",";
    if (std::isfinite(r.plr)) {
      std::snprintf(buf, sizeof buf, "%.17g", r.plr);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g\n", r.spl);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Data collection and curation

struct CollectResult {
  std::vector<ChoiceRecord> records;
  std::vector<int> interventions;  // per episode
};

/// Oracle-guided episodes on the first `episodes` scenarios (cycling when
/// there are fewer scenarios than episodes), gathering every intervention.
inline CollectResult collect(const std::vector<Scenario>& scenarios, int episodes, const OracleConfig& oracle,
                             const EvalConfig& cfg) {
  CollectResult out;
  if (episodes <= 0 || scenarios.empty()) return out;
  std::vector<std::vector<ChoiceRecord>> per(static_cast<std::size_t>(episodes));
  out.interventions.assign(static_cast<std::size_t>(episodes), 0);
  parallel_for(per.size(), cfg.jobs, [&](std::size_t e) {
    const auto& s = scenarios[e % scenarios.size()];
    EpisodeConfig ec = cfg.episode;
    ec.planner.mode = PlannerMode::oracle_interventions;
    ec.oracle = oracle;
    ec.model.reset();
    ec.seed = scenario_stream(s, cfg.seed + e / scenarios.size());
    Episode ep(s, ec);
    ep.run();
    per[e] = ep.records();
    out.interventions[e] = ep.interventions();
  });
  for (auto& r : per) out.records.insert(out.records.end(), r.begin(), r.end());
  return out;
}

/// Scenarios on which coverage search travels at least `min_ratio` times the
/// shortest path, i.e. where exploration order matters.
inline std::vector<Scenario> curate(const std::vector<Scenario>& scenarios, double min_ratio, const EvalConfig& cfg) {
  std::vector<std::uint8_t> keep(scenarios.size(), 0);
  parallel_for(scenarios.size(), cfg.jobs, [&](std::size_t i) {
    EpisodeConfig ec = cfg.episode;
    ec.planner.mode = PlannerMode::coverage;
    ec.model.reset();
    ec.seed = scenario_stream(scenarios[i], cfg.seed);
    const int cap = static_cast<int>(std::ceil(cfg.budget_factor * full_exploration_steps(scenarios[i], cfg)));
    const auto row = run_row(scenarios[i], ec, cap, "");
    keep[i] = row.error.empty() && row.result.outcome == Outcome::found &&
              row.result.path_length >= min_ratio * row.result.shortest;
  });
  std::vector<Scenario> out;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    if (keep[i]) out.push_back(scenarios[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ablation

struct AblationVariant {
  std::string name;
  int episodes = 30;
  OracleConfig oracle;
};

/// The dataset-size grid and the oracle-behavior variants.
inline std::vector<AblationVariant> default_ablation(const OracleConfig& base, double lowered_beta = 5.0) {
  std::vector<AblationVariant> out;
  for (int n : {5, 10, 20, 30}) out.push_back({"n_eps_" + std::to_string(n), n, base});
  AblationVariant expo{"exponential", 30, base};
  expo.oracle.params.discount = DiscountKind::exponential;
  expo.oracle.params.gamma = 0.1;
  out.push_back(expo);
  AblationVariant beta{"lowered_beta", 30, base};
  beta.oracle.params.beta = lowered_beta;
  out.push_back(beta);
  AblationVariant tau{"tau_0.2", 30, base};
  tau.oracle.params.tau = 0.2;
  out.push_back(tau);
  return out;
}

struct AblationRow {
  AblationVariant variant;
  int interventions = 0;
  std::size_t records = 0;
  json aggregate;
};

/// For each variant: collect, train every seed, evaluate the learned models.
inline std::vector<AblationRow> ablation_sweep(const std::vector<Scenario>& train_scenarios,
                                               const std::vector<Scenario>& eval_scenarios,
                                               const std::vector<AblationVariant>& variants, const TrainConfig& tcfg,
                                               const EvalConfig& cfg) {
  std::vector<AblationRow> out;
  for (const auto& v : variants) {
    AblationRow row;
    row.variant = v;
    const auto data = collect(train_scenarios, v.episodes, v.oracle, cfg);
    row.records = data.records.size();
    for (int n : data.interventions) row.interventions += n;
    ModeSpec learned{PlannerMode::learned, {}};
    if (!data.records.empty()) {
      const auto& names = data.records.front().class_names;
      for (auto seed : tcfg.seeds) {
        auto trained = train(data.records, tcfg, seed, names);
        learned.models.emplace_back(v.name + "_seed" + std::to_string(seed), std::move(trained.model));
      }
      const auto suite = run_suite(eval_scenarios, {learned}, cfg);
      row.aggregate = suite.summary["modes"].value("learned", json::object());
    }
    out.push_back(std::move(row));
  }
  return out;
}

inline json ablation_to_json(const std::vector<AblationRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"variant", r.variant.name},
                   {"episodes", r.variant.episodes},
                   {"oracle", to_json(r.variant.oracle.params)},
                   {"interventions", r.interventions},
                   {"records", r.records},
                   {"learned", r.aggregate}});
  }
  return out;
}

}  // namespace semsearch
