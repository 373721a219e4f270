#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "semsearch/core/error.hpp"
#include "semsearch/core/json_util.hpp"
#include "semsearch/core/rng.hpp"
#include "semsearch/scenario.hpp"
#include "semsearch/semantics.hpp"
#include "semsearch/sim.hpp"

namespace semsearch {

enum class DiscountKind { linear, exponential };

struct ExpertParams {
  double beta = 25.0;     // rationality; <= 0 or infinite means noiseless argmax
  double rho = 0.0;       // residual error probability, [0, 0.5]
  double epsilon = 0.2;   // minimum discount of the linear model
  double tau = 0.05;      // intervention threshold on the utility gap
  DiscountKind discount = DiscountKind::linear;
  double gamma = 0.1;     // exponential discount rate

  void validate() const {
    if (std::isnan(beta)) throw ValidationError("beta must be a number");
    if (!(rho >= 0.0 && rho <= 0.5)) throw ValidationError("rho must lie in [0, 0.5]");
    if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
    if (!(tau >= 0.0)) throw ValidationError("tau must be non-negative");
    if (discount == DiscountKind::exponential && !(gamma >= 0.0)) throw ValidationError("gamma must be non-negative");
  }

  bool noiseless() const { return !(beta > 0.0) || std::isinf(beta); }
};

/// Distance discount of a frontier `distance` away when the farthest
/// frontier is `max_distance` away. Linear: 1 - d/d_max + epsilon.
/// Exponential: exp(-gamma * d/d_max). With d_max = 0 every frontier is at
/// the robot and the discount is its d = 0 value.
inline double discount(double distance, double max_distance, const ExpertParams& p) {
  const double normalized = max_distance > 0.0 ? distance / max_distance : 0.0;
  if (p.discount == DiscountKind::exponential) return std::exp(-p.gamma * normalized);
  return 1.0 - normalized + p.epsilon;
}

inline std::vector<double> discounts(const std::vector<double>& distances, const ExpertParams& p) {
  double d_max = 0.0;
  for (double d : distances) d_max = std::max(d_max, d);
  std::vector<double> out;
  out.reserve(distances.size());
  for (double d : distances) out.push_back(discount(d, d_max, p));
  return out;
}

/// delta * (p + w_coverage * gain)
inline double utility(double semantic_priority, double gain, double discount_factor, double w_coverage) {
  return discount_factor * (semantic_priority + w_coverage * gain);
}

inline double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Logistic squeezed into [rho, 1 - rho].
inline double sigma_rho(double x, double rho) { return (1.0 - 2.0 * rho) * logistic(x) + rho; }

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ValidationError("dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Probability that augmented features `preferred` are chosen over `other`.
inline double choice_probability(const std::vector<double>& preferred, const std::vector<double>& other,
                                 const std::vector<double>& weights, double beta, double rho) {
  if (preferred.size() != other.size() || preferred.size() != weights.size()) {
    throw ValidationError("dimension mismatch");
  }
  double gap = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) gap += weights[i] * (preferred[i] - other[i]);
  return sigma_rho(beta * gap, rho);
}

/// Everything known about one frontier at decision time.
struct Candidate {
  int frontier_id = 0;
  Cell position;
  int region = -1;
  double gain = 0.0;
  double distance = 0.0;  // meters through the graph from the robot
  FeatureVector features;
};

// ---------------------------------------------------------------------------
// Oracle expert

enum class OracleKind { room_priorities, linear };

/// Simulated expert. The room-priority variant classifies each frontier's
/// region by the characteristic objects observed in it.
struct OracleConfig {
  OracleKind kind = OracleKind::room_priorities;
  ExpertParams params;
  RoomCategory target_room = RoomCategory::bedroom;
  double target_priority = 1.0;
  double unseen_priority = 0.6;
  double door_bonus = 0.3;
  double other_priority = 0.0;
  std::map<RoomCategory, double> room_priority = {{RoomCategory::living_room, 0.7}};  // overrides other_priority
  std::map<std::string, RoomCategory> characteristic = {
      {"fridge", RoomCategory::kitchen},  {"sink", RoomCategory::kitchen},     {"countertop", RoomCategory::kitchen},
      {"toilet", RoomCategory::bathroom}, {"shower", RoomCategory::bathroom},  {"sofa", RoomCategory::living_room},
      {"tv", RoomCategory::living_room},  {"bed", RoomCategory::bedroom},      {"wardrobe", RoomCategory::bedroom}};
  std::string door_class = "door";
  double door_radius = 6.0;  // cells; a door this close earns the bonus
  double w_coverage = 0.05;
  PriorityModel linear_model;  // used by OracleKind::linear
};

inline std::string to_string(DiscountKind k) { return k == DiscountKind::linear ? "linear" : "exponential"; }

inline json to_json(const ExpertParams& p) {
  return {{"beta", p.beta},   {"rho", p.rho},           {"epsilon", p.epsilon},
          {"tau", p.tau},     {"discount", to_string(p.discount)}, {"gamma", p.gamma}};
}

inline ExpertParams expert_params_from_json(const json& j, ExpertParams p = {}) {
  p.beta = optional_field(j, "beta", p.beta);
  p.rho = optional_field(j, "rho", p.rho);
  p.epsilon = optional_field(j, "epsilon", p.epsilon);
  p.tau = optional_field(j, "tau", p.tau);
  const auto kind = optional_field<std::string>(j, "discount", to_string(p.discount));
  if (kind == "linear") {
    p.discount = DiscountKind::linear;
  } else if (kind == "exponential") {
    p.discount = DiscountKind::exponential;
  } else {
    throw ParseError("field 'discount': expected linear or exponential");
  }
  p.gamma = optional_field(j, "gamma", p.gamma);
  p.validate();
  return p;
}

inline json to_json(const OracleConfig& o) {
  json rooms = json::object();
  for (const auto& [room, v] : o.room_priority) rooms[to_string(room)] = v;
  json chars = json::object();
  for (const auto& [name, room] : o.characteristic) chars[name] = to_string(room);
  json j = {{"kind", o.kind == OracleKind::linear ? "linear" : "room_priorities"},
            {"params", to_json(o.params)},
            {"target_room", to_string(o.target_room)},
            {"target_priority", o.target_priority},
            {"unseen_priority", o.unseen_priority},
            {"door_bonus", o.door_bonus},
            {"other_priority", o.other_priority},
            {"room_priority", rooms},
            {"characteristic", chars},
            {"door_class", o.door_class},
            {"door_radius", o.door_radius},
            {"w_coverage", o.w_coverage}};
  if (o.kind == OracleKind::linear) j["linear_model"] = model_to_json(o.linear_model);
  return j;
}

inline OracleConfig oracle_config_from_json(const json& j, OracleConfig o = {}) {
  const auto kind = optional_field<std::string>(j, "kind", o.kind == OracleKind::linear ? "linear" : "room_priorities");
  if (kind == "linear") {
    o.kind = OracleKind::linear;
  } else if (kind == "room_priorities") {
    o.kind = OracleKind::room_priorities;
  } else {
    throw ParseError("field 'kind': expected room_priorities or linear");
  }
  if (j.contains("params")) o.params = expert_params_from_json(j["params"], o.params);
  o.target_room = parse_room_category(optional_field<std::string>(j, "target_room", to_string(o.target_room)));
  o.target_priority = optional_field(j, "target_priority", o.target_priority);
  o.unseen_priority = optional_field(j, "unseen_priority", o.unseen_priority);
  o.door_bonus = optional_field(j, "door_bonus", o.door_bonus);
  o.other_priority = optional_field(j, "other_priority", o.other_priority);
  if (j.contains("room_priority")) {
    o.room_priority.clear();
    for (const auto& [k, v] : j["room_priority"].items()) o.room_priority[parse_room_category(k)] = v.get<double>();
  }
  if (j.contains("characteristic")) {
    o.characteristic.clear();
    for (const auto& [k, v] : j["characteristic"].items()) o.characteristic[k] = parse_room_category(v.get<std::string>());
  }
  o.door_class = optional_field(j, "door_class", o.door_class);
  o.door_radius = optional_field(j, "door_radius", o.door_radius);
  o.w_coverage = optional_field(j, "w_coverage", o.w_coverage);
  if (j.contains("linear_model")) o.linear_model = model_from_json(j["linear_model"]);
  return o;
}

/// Room type of `region` inferred from observed characteristic objects
/// (most frequent type, ties to the lower enum value); empty when none seen.
inline std::optional<RoomCategory> classify_region(const Scenario& s, const WorldBelief& belief, int region,
                                                   const OracleConfig& o) {
  if (region < 0) return std::nullopt;
  std::map<RoomCategory, int> votes;
  for (int idx : belief.observed_objects()) {
    const auto& obj = s.objects[idx];
    if (belief.region_of(obj.position) != region) continue;
    auto it = o.characteristic.find(s.class_names[obj.class_index]);
    if (it != o.characteristic.end()) ++votes[it->second];
  }
  if (votes.empty()) return std::nullopt;
  auto best = votes.begin();
  for (auto it = votes.begin(); it != votes.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

/// Semantic priority the oracle assigns to a frontier.
inline double oracle_priority(const Scenario& s, const WorldBelief& belief, const Candidate& c, const OracleConfig& o) {
  if (o.kind == OracleKind::linear) return priority(o.linear_model, c.features);
  double p;
  const auto room = classify_region(s, belief, c.region, o);
  if (!room) {
    p = o.unseen_priority;
  } else if (*room == o.target_room) {
    p = o.target_priority;
  } else {
    auto it = o.room_priority.find(*room);
    p = it != o.room_priority.end() ? it->second : o.other_priority;
  }
  const int door = s.class_index(o.door_class);
  if (door >= 0 && o.door_bonus != 0.0 && local_semantic(s, belief, c.position, o.door_radius)[door]) {
    p += o.door_bonus;
  }
  return p;
}

inline std::vector<double> oracle_utilities(const Scenario& s, const WorldBelief& belief,
                                            const std::vector<Candidate>& candidates, const OracleConfig& o) {
  std::vector<double> dist;
  for (const auto& c : candidates) dist.push_back(c.distance);
  const auto disc = discounts(dist, o.params);
  const double w_cov = o.kind == OracleKind::linear ? o.linear_model.w_coverage : o.w_coverage;
  std::vector<double> u;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    u.push_back(utility(oracle_priority(s, belief, candidates[i], o), candidates[i].gain, disc[i], w_cov));
  }
  return u;
}

/// Noisy choice consistent with the pairwise model: with probability 2*rho
/// a uniformly random candidate, otherwise a softmax over beta * utility.
/// For two candidates this reproduces sigma_rho(beta * (u_a - u_b)).
inline std::size_t sample_choice(const std::vector<double>& utilities, const ExpertParams& p, Rng& rng) {
  if (utilities.empty()) throw ValidationError("no candidates to choose from");
  if (p.noiseless()) {
    return static_cast<std::size_t>(std::max_element(utilities.begin(), utilities.end()) - utilities.begin());
  }
  if (p.rho > 0.0 && rng.bernoulli(2.0 * p.rho)) {
    return static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(utilities.size()) - 1));
  }
  const double top = *std::max_element(utilities.begin(), utilities.end());
  std::vector<double> weight;
  double total = 0.0;
  for (double u : utilities) {
    weight.push_back(std::exp(p.beta * (u - top)));
    total += weight.back();
  }
  double pick = rng.uniform() * total;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    pick -= weight[i];
    if (pick < 0.0) return i;
  }
  return weight.size() - 1;
}

/// Decides whether the oracle overrides the planner's subgoal. It does so
/// when its best frontier beats the planner's choice by more than tau; the
/// frontier handed over is then drawn with the expert's choice noise.
/// Returns the index into `candidates` of the intervention frontier.
inline std::optional<std::size_t> oracle_decide(const Scenario& s, const WorldBelief& belief,
                                                const std::vector<Candidate>& candidates, int planner_choice,
                                                const OracleConfig& o, Rng& rng) {
  if (candidates.empty()) return std::nullopt;
  const auto u = oracle_utilities(s, belief, candidates, o);
  std::size_t best = 0;
  for (std::size_t i = 1; i < u.size(); ++i) {
    if (u[i] > u[best]) best = i;
  }
  double planner_utility = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].frontier_id == planner_choice) planner_utility = u[i];
  }
  if (!(u[best] - planner_utility > o.params.tau)) return std::nullopt;
  return sample_choice(u, o.params, rng);
}

// ---------------------------------------------------------------------------
// Choice records

enum class Provenance { oracle, human };

struct CandidateRecord {
  int frontier_id = 0;
  Cell position;
  std::vector<double> features;  // discount * [phi, gain]

  friend bool operator==(const CandidateRecord&, const CandidateRecord&) = default;
};

struct ChoiceRecord {
  std::string scenario_id;
  std::vector<std::string> class_names;
  int timestep = 0;
  long revision = -1;
  int chosen_frontier_id = 0;
  std::vector<CandidateRecord> candidates;
  Provenance provenance = Provenance::oracle;

  std::size_t chosen_index() const {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (candidates[i].frontier_id == chosen_frontier_id) return i;
    }
    throw ValidationError("chosen frontier missing from candidates");
  }

  friend bool operator==(const ChoiceRecord&, const ChoiceRecord&) = default;
};

inline void validate_intervention(int frontier_id, const std::vector<Candidate>& candidates, long revision = -1) {
  for (const auto& c : candidates) {
    if (c.frontier_id == frontier_id) return;
  }
  throw InvalidIntervention("node " + std::to_string(frontier_id) + " is not a current frontier", revision);
}

/// Snapshots every candidate's augmented features with the learner's
/// discount model so training needs no simulator.
inline ChoiceRecord record_choice(int chosen_frontier_id, const std::vector<Candidate>& candidates,
                                  const ExpertParams& model_params, const Scenario& scenario, int timestep,
                                  Provenance provenance, long revision = -1) {
  validate_intervention(chosen_frontier_id, candidates, revision);
  if (candidates.size() < 2) throw InvalidIntervention("a choice needs at least two frontiers", revision);
  std::vector<double> dist;
  for (const auto& c : candidates) dist.push_back(c.distance);
  const auto disc = discounts(dist, model_params);
  ChoiceRecord r;
  r.scenario_id = scenario.id;
  r.class_names = scenario.class_names;
  r.timestep = timestep;
  r.revision = revision;
  r.chosen_frontier_id = chosen_frontier_id;
  r.provenance = provenance;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    r.candidates.push_back({candidates[i].frontier_id, candidates[i].position,
                            candidates[i].features.augmented(disc[i], candidates[i].gain)});
  }
  return r;
}

inline constexpr int kDatasetFormatVersion = 1;

inline json record_to_json(const ChoiceRecord& r) {
  json cands = json::array();
  for (const auto& c : r.candidates) {
    cands.push_back({{"frontier_id", c.frontier_id}, {"position", to_json_cell(c.position)}, {"features", c.features}});
  }
  return {{"format_version", kDatasetFormatVersion},
          {"scenario_id", r.scenario_id},
          {"class_names", r.class_names},
          {"timestep", r.timestep},
          {"revision", r.revision},
          {"chosen_frontier_id", r.chosen_frontier_id},
          {"provenance", r.provenance == Provenance::human ? "human" : "oracle"},
          {"candidates", cands}};
}

inline ChoiceRecord record_from_json(const json& j) {
  if (require<int>(j, "format_version") != kDatasetFormatVersion) {
    throw ParseError("field 'format_version': unsupported version");
  }
  ChoiceRecord r;
  r.scenario_id = require<std::string>(j, "scenario_id");
  r.class_names = require<std::vector<std::string>>(j, "class_names");
  r.timestep = require<int>(j, "timestep");
  r.revision = optional_field<long>(j, "revision", -1);
  r.chosen_frontier_id = require<int>(j, "chosen_frontier_id");
  const auto prov = require<std::string>(j, "provenance");
  if (prov == "human") {
    r.provenance = Provenance::human;
  } else if (prov == "oracle") {
    r.provenance = Provenance::oracle;
  } else {
    throw ParseError("field 'provenance': expected oracle or human");
  }
  const auto& cands = require_node(j, "candidates");
  if (!cands.is_array()) throw ParseError("field 'candidates': expected an array");
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const std::string ctx = "candidates[" + std::to_string(i) + "]";
    r.candidates.push_back({require<int>(cands[i], "frontier_id", ctx), require_cell(cands[i], "position", ctx),
                            require<std::vector<double>>(cands[i], "features", ctx)});
  }
  if (r.candidates.size() < 2) throw ValidationError("record needs at least two candidates");
  const auto dim = r.candidates.front().features.size();
  for (const auto& c : r.candidates) {
    if (c.features.size() != dim) throw ValidationError("candidate feature dimensions differ");
  }
  if (dim != r.class_names.size() + 2) throw ValidationError("feature dimension does not match class_names");
  r.chosen_index();
  return r;
}

inline std::string dataset_to_string(const std::vector<ChoiceRecord>& records) {
  std::string out;
  for (const auto& r : records) out += record_to_json(r).dump() + "\n";
  return out;
}

inline std::vector<ChoiceRecord> dataset_from_string(const std::string& text, const std::string& source = "dataset") {
  std::vector<ChoiceRecord> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline void save_dataset(const std::vector<ChoiceRecord>& records, const std::string& path) {
  write_file(path, dataset_to_string(records));
}

inline std::vector<ChoiceRecord> load_dataset(const std::string& path) {
  return dataset_from_string(read_file(path), path);
}

}  // namespace semsearch
