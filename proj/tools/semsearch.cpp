// Command-line front end: scenario generation, data collection, training,
// evaluation and the live bridge server.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "semsearch/semsearch.hpp"
#include "semsearch/server.hpp"

namespace fs = std::filesystem;
using namespace semsearch;

namespace {

std::vector<std::string> files_with_suffix(const std::string& dir, const std::string& suffix) {
  if (!fs::is_directory(dir)) throw ParseError("not a directory: '" + dir + "'");
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > suffix.size() && name.ends_with(suffix)) out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Scenario> load_scenarios(const std::string& dir) {
  std::vector<Scenario> out;
  for (const auto& path : files_with_suffix(dir, kScenarioSuffix)) out.push_back(load_scenario(path));
  if (out.empty()) throw ParseError("no scenario files in '" + dir + "'");
  return out;
}

std::vector<std::pair<std::string, PriorityModel>> load_weights(const std::string& path) {
  std::vector<std::pair<std::string, PriorityModel>> out;
  if (fs::is_directory(path)) {
    for (const auto& file : files_with_suffix(path, ".weights.json")) {
      auto name = fs::path(file).filename().string();
      name.resize(name.size() - std::string(".weights.json").size());
      out.emplace_back(name, load_model(file));
    }
  } else {
    out.emplace_back(fs::path(path).stem().string(), load_model(path));
  }
  if (out.empty()) throw ParseError("no weight files in '" + path + "'");
  return out;
}

EpisodeConfig episode_config(const std::string& config_path, const std::string& oracle_path) {
  EpisodeConfig cfg;
  if (!config_path.empty()) cfg = episode_config_from_json(parse_document(read_file(config_path), config_path));
  if (!oracle_path.empty()) cfg.oracle = oracle_config_from_json(parse_document(read_file(oracle_path), oracle_path), cfg.oracle);
  return cfg;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

void write_suite(const SuiteResult& suite, const std::string& out_dir) {
  fs::create_directories(out_dir);
  write_file((fs::path(out_dir) / "episodes.jsonl").string(), rows_to_jsonl(suite.rows));
  write_file((fs::path(out_dir) / "summary.json").string(), suite.summary.dump(2) + "\n");
  write_file((fs::path(out_dir) / "plr.csv").string(), plr_csv(suite.rows));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic target search: generate, collect, train, evaluate, serve"};
  app.require_subcommand(1);

  std::string config_path, oracle_path;
  int jobs = 1;
  std::uint64_t seed = 0;

  // gen
  auto* gen = app.add_subcommand("gen", "Generate scenario files");
  int count = 10;
  std::string out_dir = "scenarios", gen_config;
  double curate_ratio = 0.0;
  gen->add_option("--count", count, "Number of scenarios")->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "First generator seed");
  gen->add_option("--out", out_dir, "Output directory");
  gen->add_option("--config", gen_config, "Generator config file")->check(CLI::ExistingFile);
  gen->add_option("--curate", curate_ratio, "Keep scenarios where coverage travels at least this multiple of the shortest path");
  gen->add_option("--jobs", jobs, "Parallel workers");

  // collect
  auto* collect_cmd = app.add_subcommand("collect", "Run oracle-guided episodes and record interventions");
  std::string scenarios_dir, out_file = "interventions.jsonl";
  int episodes = 30;
  collect_cmd->add_option("--scenarios", scenarios_dir, "Scenario directory")->required();
  collect_cmd->add_option("--episodes", episodes, "Number of episodes (N_eps)")->check(CLI::PositiveNumber);
  collect_cmd->add_option("--oracle", oracle_path, "Oracle parameter file")->check(CLI::ExistingFile);
  collect_cmd->add_option("--config", config_path, "Episode config file")->check(CLI::ExistingFile);
  collect_cmd->add_option("--out", out_file, "Output dataset (JSONL)");
  collect_cmd->add_option("--seed", seed, "Episode seed");
  collect_cmd->add_option("--jobs", jobs, "Parallel workers");

  // train
  auto* train_cmd = app.add_subcommand("train", "Fit priority weights to an intervention dataset");
  std::string data_file, weights_out = "weights";
  TrainConfig tcfg;
  int n_seeds = 10;
  bool no_clamp = false;
  train_cmd->add_option("--data", data_file, "Dataset (JSONL)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--epochs", tcfg.epochs, "Epochs")->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", tcfg.learning_rate, "Learning rate");
  train_cmd->add_option("--seeds", n_seeds, "Number of seeds (0..N-1)")->check(CLI::PositiveNumber);
  train_cmd->add_option("--beta", tcfg.beta, "Rationality used by the likelihood");
  train_cmd->add_option("--rho", tcfg.rho, "Residual error used by the likelihood");
  train_cmd->add_flag("--no-clamp", no_clamp, "Do not project weights onto their domain");
  train_cmd->add_option("--out", weights_out, "Output directory");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate planner modes on a scenario suite");
  std::string modes_arg = "learned,coverage,oracle", weights_path, eval_out = "results";
  double budget_factor = 4.0;
  std::string trace_dir;
  eval_cmd->add_option("--scenarios", scenarios_dir, "Scenario directory")->required();
  eval_cmd->add_option("--modes", modes_arg, "Comma-separated planner modes");
  eval_cmd->add_option("--weights", weights_path, "Weight file or directory");
  eval_cmd->add_option("--oracle", oracle_path, "Oracle parameter file")->check(CLI::ExistingFile);
  eval_cmd->add_option("--config", config_path, "Episode config file")->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", eval_out, "Output directory");
  eval_cmd->add_option("--jobs", jobs, "Parallel workers");
  eval_cmd->add_option("--seed", seed, "Episode seed");
  eval_cmd->add_option("--budget-factor", budget_factor, "Step cap relative to full coverage exploration");

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "Dataset-size and oracle-behavior sweep");
  std::string train_dir, eval_dir;
  double lowered_beta = 5.0;
  ablate_cmd->add_option("--train-scenarios", train_dir, "Scenarios for data collection")->required();
  ablate_cmd->add_option("--eval-scenarios", eval_dir, "Scenarios for evaluation")->required();
  ablate_cmd->add_option("--oracle", oracle_path, "Base oracle parameter file")->check(CLI::ExistingFile);
  ablate_cmd->add_option("--config", config_path, "Episode config file")->check(CLI::ExistingFile);
  ablate_cmd->add_option("--lowered-beta", lowered_beta, "Rationality of the lowered-beta variant");
  ablate_cmd->add_option("--out", eval_out, "Output directory");
  ablate_cmd->add_option("--jobs", jobs, "Parallel workers");
  ablate_cmd->add_option("--seed", seed, "Episode seed");

  // run
  auto* run_cmd = app.add_subcommand("run", "Run one episode and write its trace");
  std::string scenario_file, mode_arg = "coverage", trace_file;
  run_cmd->add_option("--scenario", scenario_file, "Scenario file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--mode", mode_arg, "Planner mode");
  run_cmd->add_option("--weights", weights_path, "Weight file")->check(CLI::ExistingFile);
  run_cmd->add_option("--oracle", oracle_path, "Oracle parameter file")->check(CLI::ExistingFile);
  run_cmd->add_option("--config", config_path, "Episode config file")->check(CLI::ExistingFile);
  run_cmd->add_option("--trace", trace_file, "Trace output (JSONL)");
  run_cmd->add_option("--seed", seed, "Episode seed");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Serve a live episode over the line protocol");
  ServerConfig scfg;
  std::string record_file, log_file;
  serve_cmd->add_option("--scenario", scenario_file, "Scenario file")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--mode", mode_arg, "Planner mode (learned|coverage|...)");
  serve_cmd->add_option("--weights", weights_path, "Weight file")->check(CLI::ExistingFile);
  serve_cmd->add_option("--oracle", oracle_path, "Oracle parameter file")->check(CLI::ExistingFile);
  serve_cmd->add_option("--config", config_path, "Episode config file")->check(CLI::ExistingFile);
  serve_cmd->add_option("--port", scfg.port, "TCP port (-1 disables TCP)");
  serve_cmd->add_option("--host", scfg.host, "Bind address");
  serve_cmd->add_option("--record", record_file, "Human intervention dataset (JSONL)");
  serve_cmd->add_option("--log", log_file, "Message log (JSONL)");
  serve_cmd->add_flag("--stdio", scfg.use_stdio, "Also accept commands on stdin and reply on stdout");
  serve_cmd->add_option("--tick-ms", scfg.tick_ms, "Delay between free-running steps");
  serve_cmd->add_flag("--exit-on-end", scfg.exit_on_end, "Exit when the episode ends");
  serve_cmd->add_option("--seed", seed, "Episode seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      GeneratorConfig gcfg;
      if (!gen_config.empty()) gcfg = generator_config_from_json(parse_document(read_file(gen_config), gen_config));
      std::vector<Scenario> scenarios;
      for (int i = 0; i < count; ++i) scenarios.push_back(generate_scenario(seed + static_cast<std::uint64_t>(i), gcfg));
      if (curate_ratio > 0.0) {
        EvalConfig ecfg;
        ecfg.jobs = jobs;
        scenarios = curate(scenarios, curate_ratio, ecfg);
      }
      fs::create_directories(out_dir);
      for (const auto& s : scenarios) save_scenario(s, (fs::path(out_dir) / (s.id + kScenarioSuffix)).string());
      std::printf("wrote %zu scenarios to %s\n", scenarios.size(), out_dir.c_str());
    } else if (*collect_cmd) {
      EvalConfig ecfg;
      ecfg.episode = episode_config(config_path, oracle_path);
      ecfg.jobs = jobs;
      ecfg.seed = seed;
      const auto scenarios = load_scenarios(scenarios_dir);
      const auto data = collect(scenarios, episodes, ecfg.episode.oracle, ecfg);
      save_dataset(data.records, out_file);
      int total = 0;
      for (int n : data.interventions) total += n;
      std::printf("%d episodes, %d interventions, %zu records -> %s\n", episodes, total, data.records.size(),
                  out_file.c_str());
    } else if (*train_cmd) {
      tcfg.clamp = !no_clamp;
      tcfg.seeds.clear();
      for (int i = 0; i < n_seeds; ++i) tcfg.seeds.push_back(static_cast<std::uint64_t>(i));
      const auto records = load_dataset(data_file);
      if (records.empty()) throw DegenerateDataset("dataset is empty");
      fs::create_directories(weights_out);
      for (auto s : tcfg.seeds) {
        const auto r = train(records, tcfg, s, records.front().class_names);
        const auto stem = (fs::path(weights_out) / ("seed" + std::to_string(s))).string();
        save_model(r.model, stem + ".weights.json");
        write_file(stem + ".loss.csv", loss_curve_csv(r.loss_curve));
        std::printf("seed %llu: nll %.6g -> %.6g\n", static_cast<unsigned long long>(s), r.loss_curve.front(),
                    r.model.metadata["final_nll"].get<double>());
      }
    } else if (*eval_cmd) {
      EvalConfig ecfg;
      ecfg.episode = episode_config(config_path, oracle_path);
      ecfg.jobs = jobs;
      ecfg.seed = seed;
      ecfg.budget_factor = budget_factor;
      const auto scenarios = load_scenarios(scenarios_dir);
      std::vector<ModeSpec> modes;
      for (const auto& name : split(modes_arg, ',')) {
        ModeSpec m{parse_planner_mode(name), {}};
        if (m.mode == PlannerMode::learned || m.mode == PlannerMode::linear_oracle) {
          if (weights_path.empty()) throw ValidationError("mode " + name + " needs --weights");
          m.models = load_weights(weights_path);
        }
        modes.push_back(std::move(m));
      }
      const auto suite = run_suite(scenarios, modes, ecfg);
      write_suite(suite, eval_out);
      std::cout << suite.summary.dump(2) << "\n";
    } else if (*ablate_cmd) {
      EvalConfig ecfg;
      ecfg.episode = episode_config(config_path, oracle_path);
      ecfg.jobs = jobs;
      ecfg.seed = seed;
      const auto rows = ablation_sweep(load_scenarios(train_dir), load_scenarios(eval_dir),
                                       default_ablation(ecfg.episode.oracle, lowered_beta), TrainConfig{}, ecfg);
      fs::create_directories(eval_out);
      const auto table = ablation_to_json(rows);
      write_file((fs::path(eval_out) / "ablation.json").string(), table.dump(2) + "\n");
      std::cout << table.dump(2) << "\n";
    } else if (*run_cmd || *serve_cmd) {
      auto cfg = episode_config(config_path, oracle_path);
      cfg.planner.mode = parse_planner_mode(mode_arg);
      cfg.seed = seed;
      if (!weights_path.empty()) cfg.model = load_model(weights_path);
      Scenario scenario;
      try {
        scenario = load_scenario(scenario_file);
      } catch (const Error& e) {
        throw ScenarioInvalid(e.what());
      }
      if (*run_cmd) {
        cfg.trace = !trace_file.empty();
        Episode ep(scenario, cfg);
        const auto r = ep.run();
        if (cfg.trace) write_file(trace_file, trace_to_jsonl(ep.trace()));
        std::printf("%s %s: %s after %d steps, %.3f m traveled, %d interventions\n", r.scenario_id.c_str(),
                    r.mode.c_str(), to_string(r.outcome).c_str(), r.steps, r.path_length, r.interventions);
      } else {
        SessionConfig sc;
        sc.episode = cfg;
        Session session(scenario, sc);
        LineServer server(session, scfg);
        std::FILE* log = log_file.empty() ? nullptr : std::fopen(log_file.c_str(), "w");
        if (!log_file.empty() && !log) throw Error("cannot write '" + log_file + "'");
        if (log) std::fprintf(log, "%s\n", session.snapshot().dump().c_str());
        std::size_t saved = 0;
        server.on_message([&](const json& m) {
          if (log) {
            std::fprintf(log, "%s\n", m.dump().c_str());
            std::fflush(log);
          }
          if (!record_file.empty() && session.human_records().size() != saved) {
            save_dataset(session.human_records(), record_file);
            saved = session.human_records().size();
          }
        });
        server.open();
        if (scfg.port >= 0) std::fprintf(stderr, "listening on %s:%d\n", scfg.host.c_str(), server.bound_port());
        server.run();
        if (log) std::fclose(log);
        if (!record_file.empty()) save_dataset(session.human_records(), record_file);
      }
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
