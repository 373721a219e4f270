#pragma once

#include <string>

#include "semsearch/core/json_util.hpp"
#include "semsearch/episode.hpp"

namespace semsearch {

inline constexpr const char* kScenarioSuffix = ".scenario.json";

inline json to_json(const EpisodeConfig& c) {
  return {{"sim", {{"sensing_range", c.sim.sensing_range}, {"step_bound", c.sim.step_bound}, {"max_steps", c.sim.max_steps}}},
          {"topo",
           {{"rays", c.topo.rays},
            {"gain_threshold", c.topo.gain_threshold},
            {"node_separation", c.topo.node_separation},
            {"max_neighbors", c.topo.max_neighbors},
            {"connect_radius", c.topo.connect_radius}}},
          {"features",
           {{"lambda", c.features.lambda}, {"local_radius", c.features.local_radius}, {"novelty_count", c.features.novelty_count}}},
          {"planner",
           {{"alpha", c.planner.alpha},
            {"mode", to_string(c.planner.mode)},
            {"gain_change_threshold", c.planner.gain_change_threshold},
            {"lns",
             {{"max_iters", c.planner.lns.max_iters},
              {"destroy_fraction_max", c.planner.lns.destroy_fraction_max},
              {"time_budget_ms", c.planner.lns.time_budget_ms}}}}},
          {"record_params", to_json(c.record_params)},
          {"oracle", to_json(c.oracle)},
          {"seed", c.seed}};
}

/// Every field is optional; missing ones keep their defaults.
inline EpisodeConfig episode_config_from_json(const json& j, EpisodeConfig c = {}) {
  if (j.contains("sim")) {
    const auto& s = j["sim"];
    c.sim.sensing_range = optional_field(s, "sensing_range", c.sim.sensing_range, "sim");
    c.sim.step_bound = optional_field(s, "step_bound", c.sim.step_bound, "sim");
    c.sim.max_steps = optional_field(s, "max_steps", c.sim.max_steps, "sim");
  }
  if (j.contains("topo")) {
    const auto& t = j["topo"];
    c.topo.rays = optional_field(t, "rays", c.topo.rays, "topo");
    c.topo.gain_threshold = optional_field(t, "gain_threshold", c.topo.gain_threshold, "topo");
    c.topo.node_separation = optional_field(t, "node_separation", c.topo.node_separation, "topo");
    c.topo.max_neighbors = optional_field(t, "max_neighbors", c.topo.max_neighbors, "topo");
    c.topo.connect_radius = optional_field(t, "connect_radius", c.topo.connect_radius, "topo");
  }
  if (j.contains("features")) {
    const auto& f = j["features"];
    c.features.lambda = optional_field(f, "lambda", c.features.lambda, "features");
    c.features.local_radius = optional_field(f, "local_radius", c.features.local_radius, "features");
    c.features.novelty_count = optional_field(f, "novelty_count", c.features.novelty_count, "features");
  }
  if (j.contains("planner")) {
    const auto& p = j["planner"];
    c.planner.alpha = optional_field(p, "alpha", c.planner.alpha, "planner");
    if (!(c.planner.alpha >= 0.0 && c.planner.alpha <= 1.0)) throw ValidationError("planner.alpha must lie in [0, 1]");
    c.planner.mode = parse_planner_mode(optional_field<std::string>(p, "mode", to_string(c.planner.mode), "planner"));
    c.planner.gain_change_threshold =
        optional_field(p, "gain_change_threshold", c.planner.gain_change_threshold, "planner");
    if (p.contains("lns")) {
      const auto& l = p["lns"];
      c.planner.lns.max_iters = optional_field(l, "max_iters", c.planner.lns.max_iters, "planner.lns");
      c.planner.lns.destroy_fraction_max =
          optional_field(l, "destroy_fraction_max", c.planner.lns.destroy_fraction_max, "planner.lns");
      c.planner.lns.time_budget_ms = optional_field(l, "time_budget_ms", c.planner.lns.time_budget_ms, "planner.lns");
    }
  }
  if (j.contains("record_params")) c.record_params = expert_params_from_json(j["record_params"], c.record_params);
  if (j.contains("oracle")) c.oracle = oracle_config_from_json(j["oracle"], c.oracle);
  c.seed = optional_field(j, "seed", c.seed);
  return c;
}

}  // namespace semsearch
