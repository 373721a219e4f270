#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semsearch/core/error.hpp"
#include "semsearch/core/json_util.hpp"
#include "semsearch/core/rng.hpp"
#include "semsearch/expert.hpp"
#include "semsearch/planner.hpp"
#include "semsearch/scenario.hpp"
#include "semsearch/semantics.hpp"
#include "semsearch/sim.hpp"
#include "semsearch/topo.hpp"

namespace semsearch {

enum class Outcome { running, found, exhausted, budget };

inline std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::running: return "running";
    case Outcome::found: return "found";
    case Outcome::exhausted: return "exhausted";
    case Outcome::budget: return "budget";
  }
  return "?";
}

struct EpisodeConfig {
  SimConfig sim;
  TopoConfig topo;
  FeatureConfig features;
  PlannerConfig planner;
  ExpertParams record_params;         // discount model for recorded features
  OracleConfig oracle;                // oracle_priorities and oracle_interventions
  std::optional<PriorityModel> model; // learned and linear_oracle
  std::uint64_t seed = 0;             // scenario RNG stream, shared by all modes
  bool trace = false;
};

struct EpisodeResult {
  std::string scenario_id;
  std::string mode;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::running;
  double path_length = 0.0;
  double shortest = 0.0;
  int steps = 0;
  int interventions = 0;
  std::size_t explored_cells = 0;
};

/// What one step changed.
struct StepInfo {
  int step = 0;
  std::vector<ExploredCell> new_cells;
  std::vector<int> new_objects;
  PlanStep plan;
  int from_node = -1;
  int to_node = -1;
  std::optional<int> intervention;  // oracle override, frontier id
};

/// One search episode: sense, maintain the graph, plan, move one edge.
class Episode {
 public:
  Episode(const Scenario& scenario, EpisodeConfig cfg)
      : s_(&scenario), cfg_(std::move(cfg)), policy_(cfg_.planner) {
    validate(cfg_.sim, scenario.cell_size);
    cfg_.record_params.validate();
    if (uses_model() && !cfg_.model) throw ValidationError("mode " + to_string(cfg_.planner.mode) + " needs weights");
    if (cfg_.model) check_compatible(*cfg_.model, scenario);
    cfg_.topo.range = cfg_.sim.sensing_range / scenario.cell_size;
    reset();
  }

  void reset() {
    Rng root(cfg_.seed);
    topo_rng_ = root.fork(1);
    plan_rng_ = root.fork(2);
    oracle_rng_ = root.fork(3);
    belief_ = WorldBelief(*s_);
    graph_ = TopoGraph(cfg_.topo, s_->grid_size, s_->grid_size, s_->cell_size);
    policy_ = FrontierPolicy(cfg_.planner);
    features_ = FeatureCache();
    records_.clear();
    trace_.clear();
    steps_ = 0;
    interventions_ = 0;
    outcome_ = Outcome::running;
    const auto delta = sense(*s_, belief_, belief_.robot_cell(), cfg_.sim);
    belief_.apply(delta);
    graph_.expand(belief_, delta.cells, topo_rng_);
    graph_.mark_observed(graph_.robot_node());
    graph_.update_gains(belief_, delta.cells);
    initial_cells_ = delta.cells;
    initial_objects_ = delta.objects;
    refresh_outcome();
  }

  const Scenario& scenario() const { return *s_; }
  const EpisodeConfig& config() const { return cfg_; }
  const WorldBelief& belief() const { return belief_; }
  const TopoGraph& graph() const { return graph_; }
  const FrontierPolicy& policy() const { return policy_; }
  const std::vector<ChoiceRecord>& records() const { return records_; }
  const std::vector<json>& trace() const { return trace_; }
  const std::vector<ExploredCell>& initial_cells() const { return initial_cells_; }
  const std::vector<int>& initial_objects() const { return initial_objects_; }
  Outcome outcome() const { return outcome_; }
  bool done() const { return outcome_ != Outcome::running; }
  int steps() const { return steps_; }
  int interventions() const { return interventions_; }

  void set_max_steps(int n) { cfg_.sim.max_steps = n; }

  /// Current frontiers with distances and features.
  std::vector<Candidate> candidates() {
    std::vector<Candidate> out;
    const auto ids = graph_.frontier_ids();
    if (ids.empty()) return out;
    const auto dist = dijkstra(graph_, graph_.robot_node());
    for (int id : ids) {
      const auto& n = graph_.node(id);
      Candidate c;
      c.frontier_id = id;
      c.position = n.cell;
      c.region = belief_.region_of(n.cell);
      c.gain = n.gain;
      c.distance = dist[id];
      c.features = features_.get(*s_, belief_, id, n.cell, c.region, cfg_.features);
      out.push_back(std::move(c));
    }
    return out;
  }

  /// Semantic priority p per frontier for the configured mode; empty when
  /// the mode schedules by coverage alone.
  std::vector<double> semantic_priorities(const std::vector<int>& ids) {
    std::vector<double> out;
    const auto mode = cfg_.planner.mode;
    if (!uses_semantics(mode)) return out;
    for (int id : ids) {
      const auto& n = graph_.node(id);
      const int region = belief_.region_of(n.cell);
      const auto& f = features_.get(*s_, belief_, id, n.cell, region, cfg_.features);
      if (mode == PlannerMode::oracle_priorities) {
        Candidate c;
        c.frontier_id = id;
        c.position = n.cell;
        c.region = region;
        c.gain = n.gain;
        c.features = f;
        out.push_back(oracle_priority(*s_, belief_, c, cfg_.oracle));
      } else {
        out.push_back(priority(*cfg_.model, f));
      }
    }
    return out;
  }

  /// Applies an expert choice: validates it against the current frontiers,
  /// records it, and pins it as the subgoal.
  const ChoiceRecord& intervene(int frontier_id, Provenance provenance, long revision = -1) {
    if (done()) throw InvalidIntervention("episode has ended", revision);
    const auto cands = candidates();
    validate_intervention(frontier_id, cands, revision);
    records_.push_back(record_choice(frontier_id, cands, cfg_.record_params, *s_, steps_, provenance, revision));
    policy_.override_subgoal(frontier_id);
    ++interventions_;
    return records_.back();
  }

  /// Validates and pins a subgoal, recording it only when at least two
  /// frontiers exist (a single frontier carries no preference).
  void intervene_or_pin(int frontier_id, Provenance provenance, long revision = -1) {
    const auto cands = candidates();
    validate_intervention(frontier_id, cands, revision);
    if (cands.size() >= 2) {
      intervene(frontier_id, provenance, revision);
    } else {
      policy_.override_subgoal(frontier_id);
    }
  }

  /// Pins a current frontier as the subgoal without recording a choice.
  void pin_subgoal(int frontier_id) {
    const auto ids = graph_.frontier_ids();
    if (!std::binary_search(ids.begin(), ids.end(), frontier_id)) {
      throw InvalidIntervention("node " + std::to_string(frontier_id) + " is not a current frontier");
    }
    policy_.override_subgoal(frontier_id);
  }

  /// Switches the priority function; the next step replans.
  void set_planner_mode(PlannerMode mode) {
    if ((mode == PlannerMode::learned || mode == PlannerMode::linear_oracle) && !cfg_.model) {
      throw ValidationError("mode " + to_string(mode) + " needs weights");
    }
    cfg_.planner.mode = mode;
    const int pinned = policy_.override_target();
    policy_ = FrontierPolicy(cfg_.planner);
    if (pinned >= 0) policy_.override_subgoal(pinned);
  }

  StepInfo step() {
    if (done()) throw IllegalCommand("episode has ended");
    StepInfo info;
    info.step = steps_;
    if (steps_ >= cfg_.sim.max_steps) {
      outcome_ = Outcome::budget;
      return info;
    }
    info.plan = policy_.plan(graph_, [this](const std::vector<int>& ids) { return semantic_priorities(ids); },
                             plan_rng_);
    if (cfg_.planner.mode == PlannerMode::oracle_interventions && info.plan.replanned &&
        info.plan.frontiers.size() >= 2) {
      const auto cands = candidates();
      const auto pick = oracle_decide(*s_, belief_, cands, policy_.subgoal(), cfg_.oracle, oracle_rng_);
      if (pick) {
        const int id = cands[*pick].frontier_id;
        records_.push_back(record_choice(id, cands, cfg_.record_params, *s_, steps_, Provenance::oracle));
        policy_.override_subgoal(id);
        ++interventions_;
        info.intervention = id;
      }
    }
    info.plan.subgoal = policy_.subgoal();
    info.from_node = graph_.robot_node();
    info.to_node = policy_.next_hop(graph_);
    traverse(info);
    ++steps_;
    if (cfg_.trace) trace_.push_back(trace_record(info));
    return info;
  }

  EpisodeResult run() {
    while (!done()) step();
    return result();
  }

  EpisodeResult result() const {
    EpisodeResult r;
    r.scenario_id = s_->id;
    r.mode = to_string(cfg_.planner.mode);
    r.seed = cfg_.seed;
    r.outcome = outcome_;
    r.path_length = belief_.traveled();
    r.steps = steps_;
    r.interventions = interventions_;
    r.explored_cells = belief_.explored_count();
    return r;
  }

 private:
  bool uses_model() const {
    return cfg_.planner.mode == PlannerMode::learned || cfg_.planner.mode == PlannerMode::linear_oracle;
  }

  void refresh_outcome() {
    switch (check_termination(*s_, belief_, graph_.frontier_ids().size())) {
      case Termination::found: outcome_ = Outcome::found; break;
      case Termination::exhausted: outcome_ = Outcome::exhausted; break;
      case Termination::running: outcome_ = Outcome::running; break;
    }
  }

  /// Moves along the straight edge in sub-steps shorter than the step bound,
  /// sensing after each; stops early once the target is seen.
  void traverse(StepInfo& info) {
    const Cell goal = graph_.node(info.to_node).cell;
    std::vector<Cell> line;
    traverse_line(belief_.robot_cell(), goal, [&](Cell c) {
      line.push_back(c);
      return true;
    });
    const double reach = cfg_.sim.step_bound / s_->cell_size;
    const int target = s_->target_object();
    std::size_t at = 0;
    bool found = false;
    while (at + 1 < line.size() && !found) {
      std::size_t next = at + 1;
      while (next + 1 < line.size() && cell_distance(line[at], line[next + 1]) < reach) ++next;
      belief_.apply_action(line[next] - line[at], cfg_.sim.step_bound);
      at = next;
      auto delta = sense(*s_, belief_, belief_.robot_cell(), cfg_.sim);
      belief_.apply(delta);
      info.new_cells.insert(info.new_cells.end(), delta.cells.begin(), delta.cells.end());
      info.new_objects.insert(info.new_objects.end(), delta.objects.begin(), delta.objects.end());
      found = target >= 0 && belief_.has_observed(target);
    }
    if (!found) {
      graph_.set_robot_node(info.to_node);
      graph_.mark_observed(info.to_node);
    }
    graph_.expand(belief_, info.new_cells, topo_rng_);
    graph_.update_gains(belief_, info.new_cells);
    refresh_outcome();
  }

  json trace_record(const StepInfo& info) const {
    json objects = json::array();
    for (int o : info.new_objects) {
      const auto& obj = s_->objects[o];
      objects.push_back({{"index", o}, {"class", s_->class_names[obj.class_index]}, {"position", to_json_cell(obj.position)}});
    }
    json r = {{"step", info.step},
              {"position", to_json_cell(belief_.robot_cell())},
              {"new_cells", info.new_cells.size()},
              {"new_objects", objects},
              {"subgoal", info.plan.subgoal},
              {"replanned", info.plan.replanned},
              {"tour", info.plan.tour},
              {"traveled", belief_.traveled()}};
    if (info.plan.replanned) {
      json fs = json::array();
      for (std::size_t i = 0; i < info.plan.frontiers.size(); ++i) {
        json f = {{"id", info.plan.frontiers[i]}, {"P", info.plan.priorities[i]}};
        if (!info.plan.semantic.empty()) f["p"] = info.plan.semantic[i];
        fs.push_back(f);
      }
      r["frontiers"] = fs;
    }
    if (info.intervention) r["intervention"] = *info.intervention;
    return r;
  }

  const Scenario* s_;
  EpisodeConfig cfg_;
  WorldBelief belief_;
  TopoGraph graph_;
  FrontierPolicy policy_;
  FeatureCache features_;
  Rng topo_rng_, plan_rng_, oracle_rng_;
  std::vector<ChoiceRecord> records_;
  std::vector<json> trace_;
  std::vector<ExploredCell> initial_cells_;
  std::vector<int> initial_objects_;
  int steps_ = 0;
  int interventions_ = 0;
  Outcome outcome_ = Outcome::running;
};

inline std::string trace_to_jsonl(const std::vector<json>& trace) {
  std::string out;
  for (const auto& r : trace) out += r.dump() + "\n";
  return out;
}

}  // namespace semsearch
